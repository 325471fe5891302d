use std::f64::consts::{E, PI};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str], config: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_shrinkerlab"));
    cmd.current_dir(dir).env_remove("SHRINKERLAB_OUT").args(args);
    if let Some(text) = config {
        fs::write(dir.join("run.cfg"), text).unwrap();
        cmd.args(["--config", "run.cfg"]);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("terminated by signal")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_needs_the_golden_torus_then_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "--out", "out"], None);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("shrinkerlab solve"), "{}", stderr(&o));

    let o = run(dir.path(), &["solve", "--out", "out"], None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let golden = report(&dir.path().join("data/v1/angenent_torus_profile.json"));
    assert!((golden["r_outer"].as_f64().unwrap() - 3.3147).abs() < 1e-3);
    assert_eq!(golden["surface"]["flags"]["topology"], "torus_like");

    let o = run(dir.path(), &["verify", "--out", "out"], None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&dir.path().join("out/verify.json"));
    assert_eq!(r["result"]["pass"], true);
    let checks = r["result"]["checks"].as_array().unwrap();
    for surface in ["circle", "line", "sphere", "cylinder", "torus"] {
        let names: Vec<&str> =
            checks.iter().filter(|c| c["surface"] == surface).map(|c| c["check"].as_str().unwrap()).collect();
        for id in ["second_moment", "first_moment", "third_moment", "fourth_moment", "directional", "corollary"] {
            assert!(names.contains(&format!("identity_{id}").as_str()), "{surface} lacks {id}");
        }
        assert!(names.contains(&"eigen_mean_curvature"));
    }
}

#[test]
fn tight_tolerance_fails_with_named_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "tolerance = 1e-12\nnodes = 32\nsurfaces = circle, sphere\n";
    let o = run(dir.path(), &["verify", "--format", "csv"], Some(cfg));
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("sphere:identity_fourth_moment") && err.contains("circle:residual_weighted_l2"), "{err}");
    let csv = fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert!(csv.starts_with("surface,check,value,tolerance,pass\n"));
    assert!(csv.lines().any(|l| l.starts_with("sphere,identity_fourth_moment,") && l.ends_with(",false")));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["verify"], Some("surfaces =\n"))), 2);
    assert_eq!(code(&run(dir.path(), &["spectrum"], Some("no_such_key = 1\n"))), 2);
    assert_eq!(code(&run(dir.path(), &["spectrum"], Some("nodes = lots\n"))), 2);
    assert_eq!(code(&run(dir.path(), &["spectrum"], Some("surface = klein_bottle\n"))), 2);
    assert_eq!(code(&run(dir.path(), &["spectrum"], Some("nodes = 2\n"))), 2);
    assert_eq!(code(&run(dir.path(), &["spectrum", "--format", "xml"], None)), 2);
    assert_eq!(code(&run(dir.path(), &["frobnicate"], None)), 2);
    assert_eq!(code(&run(dir.path(), &["verify", "--config", "missing.cfg"], None)), 2);
}

#[test]
fn numerical_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    // no closing torus starts in this window
    let o = run(dir.path(), &["solve"], Some("window_lo = 3.0\nwindow_hi = 3.1\nnodes = 256\n"));
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn circle_spectrum_matches_fourier_modes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["spectrum"], Some("count = 7\nnodes = 512\n"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&dir.path().join("spectrum.json"));
    let mu: Vec<f64> = r["result"]["mu"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    // cos kθ, sin kθ on the circle of radius √2 with L = d²/ds² + 1
    let mut expect: Vec<f64> =
        (0..4).flat_map(|k| vec![(k * k) as f64 / 2.0 - 1.0; if k == 0 { 1 } else { 2 }]).collect();
    expect.truncate(7);
    assert_eq!(mu.len(), 7);
    for (m, e) in mu.iter().zip(&expect) {
        assert!((m - e).abs() < 1e-3, "{mu:?}");
    }
}

#[test]
fn circle_entropy_is_the_density_of_the_shrinking_circle() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["entropy"], None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&dir.path().join("entropy.json"));
    let lambda = r["result"]["lambda"].as_f64().unwrap();
    assert!((lambda - (2.0 * PI / E).sqrt()).abs() < 1e-4, "{lambda}");
}

#[test]
fn dumbbell_pinches_with_a_cylinder_tangent() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["generic", "--out", "g"], Some("entropy_every = 0\n"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&dir.path().join("g/generic.json"));
    assert_eq!(r["result"]["verdict"], "cylinder tangent");
    assert_eq!(r["result"]["outcome"]["outcome"], "non_compact_singularity");
    let trace = fs::read_to_string(dir.path().join("g/generic_trace.jsonl")).unwrap();
    assert!(trace.lines().count() > 2);
    assert!(fs::read_to_string(dir.path().join("g/generic_trace.csv")).unwrap().starts_with("leg,time,"));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "surface = ellipse\nnodes = 64\nt_max = 0.3\n";
    for out in ["a", "b"] {
        assert_eq!(code(&run(dir.path(), &["flow", "--out", out], Some(cfg))), 0);
        assert_eq!(
            code(&run(dir.path(), &["spectrum", "--out", out, "--format", "csv"], Some("surface = sphere\n"))),
            0
        );
    }
    for f in ["flow.json", "flow_trace.jsonl", "flow_trace.csv", "spectrum.csv"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(!a.is_empty() && a == b, "{f} differs");
    }
    let r = report(&dir.path().join("a/flow.json"));
    assert_eq!(r["config"]["nodes"], "64");
    assert_eq!(r["result"]["termination"]["reason"], "time_budget");
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_shrinkerlab"))
        .current_dir(dir.path())
        .env("SHRINKERLAB_OUT", "from_env")
        .args(["spectrum"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("from_env/spectrum.json").exists());
}

#[test]
fn flow_reports_a_round_tangent_for_a_shrinking_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "surface = sphere\nradius = 1\nnodes = 65\nextinction_fraction = 1e-4\nentropy_every = 0\n";
    let o = run(dir.path(), &["flow"], Some(cfg));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&dir.path().join("flow.json"));
    assert_eq!(r["result"]["termination"]["reason"], "extinction");
    assert!((r["result"]["termination"]["estimated_time"].as_f64().unwrap() - 0.25).abs() < 1e-3);
    assert_eq!(r["result"]["tangent"]["classification"], "sphere");
}

fn required(schema: &str) -> Vec<String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(schema);
    let s = report(&path);
    s["required"].as_array().unwrap().iter().map(|k| k.as_str().unwrap().to_string()).collect()
}

#[test]
fn outputs_carry_the_published_schema_keys() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["solve"], Some("nodes = 256\n"))), 0);
    let r = report(&dir.path().join("solve.json"));
    let keys: Vec<&String> = r.as_object().unwrap().keys().collect();
    assert_eq!(keys.len(), required("report.schema.json").len());
    for k in required("report.schema.json") {
        assert!(r.get(&k).is_some(), "report lacks {k}");
    }
    assert!(r["config"].as_object().unwrap().values().all(Value::is_string));
    let g = report(&dir.path().join("data/v1/angenent_torus_profile.json"));
    for k in required("torus-profile.schema.json") {
        assert!(g.get(&k).is_some(), "golden file lacks {k}");
    }
    assert_eq!(g["schema"], "shrinkerlab.torus-profile/v1");
}
