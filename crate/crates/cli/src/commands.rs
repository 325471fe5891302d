//! Thin adapters from a [`RunConfig`] to the core routines.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use shrinker_core::flow::{
    extract_tangent, generic_piecewise_flow, monotonicity_audit, run_flow, FlowConfig, FlowKind, FlowTrace,
    GenericConfig, GenericOutcome, GenericReport, Probe, TangentCandidate, Termination,
};
use shrinker_core::functionals::{entropy_with, EntropyConfig};
use shrinker_core::geometry::SurfaceRecord;
use shrinker_core::shrinker::{
    identity_suite, residual, solve_angenent_torus, ShootingResult, TorusConfig, SHRINKER_L2_TOL, SHRINKER_MAX_TOL,
};
use shrinker_core::spectral::{assemble_l_with, eigen, f_stability_test, verify_eigenfunctions, Boundary};
use shrinker_core::Surface;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::report::{kv_rows, num, Report};
use crate::surfaces;

pub const GOLDEN_SCHEMA: &str = "shrinkerlab.torus-profile/v1";
const GOLDEN_FILE: &str = "v1/angenent_torus_profile.json";

fn golden_path(cfg: &RunConfig) -> PathBuf {
    let dir = cfg.string("data_dir", "data");
    PathBuf::from(dir).join(GOLDEN_FILE)
}

fn with_keys(extra: &[&'static str]) -> Vec<&'static str> {
    surfaces::KEYS.iter().chain(extra).copied().collect()
}

// ---------------------------------------------------------------------------
// verify

pub const VERIFY_KEYS: &[&str] = &["surfaces", "nodes", "tolerance", "data_dir", "density_check"];

struct Check {
    surface: String,
    name: String,
    value: f64,
    tolerance: f64,
}

impl Check {
    fn pass(&self) -> bool {
        self.value <= self.tolerance
    }
}

/// Residual, weighted identities, eigenfunction identities and (on compact
/// shrinkers) constancy of the Gaussian density along the self-similar flow.
pub fn verify(cfg: &RunConfig) -> CliResult<Report> {
    cfg.check_keys("verify", VERIFY_KEYS)?;
    let names = cfg.list("surfaces", &["circle", "line", "sphere", "cylinder", "torus"]);
    if names.is_empty() {
        return Err(CliError::Usage("verify needs at least one surface in `surfaces`".into()));
    }
    let tol: f64 = cfg.get("tolerance", 1e-3)?;
    let density_check: bool = cfg.get("density_check", true)?;
    let nodes: Option<usize> = if cfg.has("nodes") { Some(cfg.get("nodes", 0)?) } else { None };
    let mut checks = Vec::new();
    for name in &names {
        let surface = if name == "torus" {
            load_golden(cfg)?.1
        } else {
            let default = match name.as_str() {
                "circle" => 256,
                "cylinder" => 481,
                _ => 257,
            };
            surfaces::shrinker(name, nodes.unwrap_or(default))?
        };
        let mut push = |check: &str, value: f64, tolerance: f64| {
            checks.push(Check { surface: name.clone(), name: check.to_string(), value, tolerance })
        };
        let res = residual(&surface)?;
        push("residual_weighted_l2", res.weighted_l2, tol);
        if !res.is_shrinker() {
            // too coarse to count as a shrinker: the identities are not checked
            push("shrinker_gate_max", res.max, SHRINKER_MAX_TOL);
            push("shrinker_gate_weighted_l2", res.weighted_l2, SHRINKER_L2_TOL);
            continue;
        }
        for (k, v) in identity_suite(&surface)?.entries() {
            push(&format!("identity_{k}"), v, tol);
        }
        let eig = verify_eigenfunctions(&surface)?;
        push("eigen_mean_curvature", eig.mean_curvature, tol);
        for (dir, v) in &eig.translations {
            push(&format!("eigen_translation_{dir}"), *v, tol);
        }
        if density_check && surface.is_closed() && name != "torus" {
            // the shrinker is the t = -1 slice of its own flow
            let flow = FlowConfig { t_start: -1.0, t_max: -0.75, sample_interval: 0.05, ..FlowConfig::mcf() };
            let trace = run_flow(&surface, &flow)?;
            let audit = monotonicity_audit(&trace, &[Probe { x0: [0.0, 0.0], t0: 0.0 }], tol)?;
            let p = &audit.probes[0];
            push("density_max_increase", p.max_increase.max(0.0), tol);
            push("density_variation", p.variation, tol);
        }
    }
    let failures: Vec<String> =
        checks.iter().filter(|c| !c.pass()).map(|c| format!("{}:{} = {:e}", c.surface, c.name, c.value)).collect();
    let rows = checks
        .iter()
        .map(|c| vec![c.surface.clone(), c.name.clone(), num(c.value), num(c.tolerance), c.pass().to_string()])
        .collect();
    let result = json!({
        "pass": failures.is_empty(),
        "failures": failures,
        "checks": checks.iter().map(|c| json!({
            "surface": c.surface, "check": c.name, "value": c.value, "tolerance": c.tolerance, "pass": c.pass(),
        })).collect::<Vec<_>>(),
    });
    let mut report = Report::new("verify", result).table(&["surface", "check", "value", "tolerance", "pass"], rows);
    report.summary.push(format!("{} checks, {} failed", checks.len(), failures.len()));
    report.summary.extend(failures.iter().map(|f| format!("FAIL {f}")));
    if !failures.is_empty() {
        report.failure = Some(format!("{} checks above tolerance: {}", failures.len(), failures.join("; ")));
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// solve

pub const SOLVE_KEYS: &[&str] = &["nodes", "step", "window_lo", "window_hi", "tolerance", "data_dir"];

#[derive(Debug, Serialize, Deserialize)]
pub struct GoldenProfile {
    pub schema: String,
    pub solver: GoldenSolver,
    pub r_outer: f64,
    pub half_length: f64,
    pub max_z: f64,
    pub closure_defect: f64,
    pub residual_max: f64,
    pub bisection_steps: usize,
    pub surface: SurfaceRecord,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GoldenSolver {
    pub method: String,
    pub window: [f64; 2],
    pub tolerance: f64,
    pub step: f64,
    pub nodes: usize,
}

fn load_golden(cfg: &RunConfig) -> CliResult<(GoldenProfile, Surface)> {
    let path = golden_path(cfg);
    let text = std::fs::read_to_string(&path).map_err(|_| {
        CliError::Usage(format!(
            "golden torus profile {} not found; run `shrinkerlab solve` (with the same data_dir) first",
            path.display()
        ))
    })?;
    let golden: GoldenProfile = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("golden file {} is malformed: {e}", path.display())))?;
    if golden.schema != GOLDEN_SCHEMA {
        return Err(CliError::Usage(format!("golden file {} has schema {:?}", path.display(), golden.schema)));
    }
    let surface = golden.surface.clone().into_surface()?;
    Ok((golden, surface))
}

/// Solves for the rotational shrinker torus and writes its profile, with
/// the solver parameters, to the golden file under `data_dir`.
pub fn solve(cfg: &RunConfig) -> CliResult<Report> {
    cfg.check_keys("solve", SOLVE_KEYS)?;
    let base = TorusConfig::outer();
    let torus = TorusConfig {
        nodes: cfg.get("nodes", 4096)?,
        step: cfg.get("step", base.step)?,
        window: [cfg.get("window_lo", base.window[0])?, cfg.get("window_hi", base.window[1])?],
        tolerance: cfg.get("tolerance", base.tolerance)?,
        ..base
    };
    let sol: ShootingResult = solve_angenent_torus(&torus)?;
    let surface: Surface = sol.surface.clone().into();
    let golden = GoldenProfile {
        schema: GOLDEN_SCHEMA.into(),
        solver: GoldenSolver {
            method: "rk4 shooting from the outer equator, bisection on the crossing angle".into(),
            window: torus.window,
            tolerance: torus.tolerance,
            step: torus.step,
            nodes: torus.nodes,
        },
        r_outer: sol.parameter,
        half_length: sol.half_length,
        max_z: sol.max_z,
        closure_defect: sol.closure_defect,
        residual_max: sol.residual_max,
        bisection_steps: sol.bisection_steps,
        surface: SurfaceRecord::from_surface(&surface),
    };
    let path = golden_path(cfg);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(&golden).expect("golden profiles always serialize");
    text.push('\n');
    crate::report::write_atomic(&path, text.as_bytes())?;
    let pairs = [
        ("r_outer", num(sol.parameter)),
        ("half_length", num(sol.half_length)),
        ("max_z", num(sol.max_z)),
        ("closure_defect", num(sol.closure_defect)),
        ("residual_max", num(sol.residual_max)),
        ("bisection_steps", sol.bisection_steps.to_string()),
        ("nodes", surface.len().to_string()),
    ];
    let result = json!({ "golden_file": path.display().to_string(), "solution": sol });
    let mut report = Report::new("solve", result).table(&["key", "value"], kv_rows(&pairs));
    report.summary.push(format!("torus r_outer = {} written to {}", sol.parameter, path.display()));
    Ok(report)
}

// ---------------------------------------------------------------------------
// spectrum

pub const SPECTRUM_EXTRA: &[&str] = &["count", "mode", "dirichlet_radius", "stability"];

/// Lowest eigenvalues of `L` (`Lu = −μu`). On the default circle of radius
/// √2 the Fourier closed form `μ = k²/2 − 1` is reported alongside.
pub fn spectrum(cfg: &RunConfig) -> CliResult<Report> {
    cfg.check_keys("spectrum", &with_keys(SPECTRUM_EXTRA))?;
    let (name, surface) = surfaces::build(cfg, "circle")?;
    let count: usize = cfg.get("count", 5)?;
    let mode: u32 = cfg.get("mode", 0)?;
    let radius: f64 = cfg.get("dirichlet_radius", f64::INFINITY)?;
    let boundary = if radius.is_finite() { Boundary::Dirichlet { radius } } else { Boundary::Natural };
    let op = assemble_l_with(&surface.local_geometry()?, mode, boundary)?;
    let sp = eigen(&op, count)?;
    let mut result = json!({
        "surface": name,
        "nodes": surface.len(),
        "mode": mode,
        "mu": sp.eigenvalues,
        "symmetry_defect": op.symmetry_defect(),
    });
    if name == "circle" && mode == 0 && !radius.is_finite() && !cfg.has("radius") {
        // on the shrinking circle, L = ∂²_s + 1 with s ∈ [0, 2π√2)
        let closed: Vec<f64> = (0..count).map(|j| j.div_ceil(2).pow(2) as f64 / 2.0 - 1.0).collect();
        result["fourier_closed_form"] = json!(closed);
    }
    if cfg.get("stability", false)? {
        let st = f_stability_test(&surface)?;
        result["stability"] = json!({
            "mu1": st.mu1,
            "f_stable": st.f_stable,
            "entropy_verdict": st.entropy_verdict,
            "consistent": st.consistent,
        });
    }
    let rows = sp.eigenvalues.iter().enumerate().map(|(i, m)| vec![(i + 1).to_string(), num(*m)]).collect();
    let mut report = Report::new("spectrum", result).table(&["index", "mu"], rows);
    report.summary.push(format!("{name}: mu = {:?}", sp.eigenvalues));
    Ok(report)
}

// ---------------------------------------------------------------------------
// entropy

pub const ENTROPY_EXTRA: &[&str] = &["spatial", "temporal", "max_iterations", "gradient_tolerance"];

pub fn entropy(cfg: &RunConfig) -> CliResult<Report> {
    cfg.check_keys("entropy", &with_keys(ENTROPY_EXTRA))?;
    let (name, surface) = surfaces::build(cfg, "circle")?;
    let d = EntropyConfig::default();
    let ec = EntropyConfig {
        spatial: cfg.get("spatial", d.spatial)?,
        temporal: cfg.get("temporal", d.temporal)?,
        max_iterations: cfg.get("max_iterations", d.max_iterations)?,
        gradient_tolerance: cfg.get("gradient_tolerance", d.gradient_tolerance)?,
        ..d
    };
    let e = entropy_with(&surface, &ec)?;
    let result = json!({
        "surface": name,
        "nodes": surface.len(),
        "lambda": e.lambda,
        "argmax": e.argmax,
        "converged": e.converged,
        "multistart_count": e.multistart_count,
        "iterations": e.optimizer_trace.len(),
    });
    let pairs = [
        ("lambda", num(e.lambda)),
        ("x0_0", num(e.argmax.x0[0])),
        ("x0_1", e.argmax.x0.get(1).copied().map(num).unwrap_or_default()),
        ("t0", num(e.argmax.t0)),
        ("converged", e.converged.to_string()),
        ("multistart_count", e.multistart_count.to_string()),
    ];
    let mut report = Report::new("entropy", result).table(&["key", "value"], kv_rows(&pairs));
    report.summary.push(format!("{name}: lambda = {}", e.lambda));
    Ok(report)
}

// ---------------------------------------------------------------------------
// flow

pub const FLOW_EXTRA: &[&str] = &[
    "kind",
    "t_start",
    "t_max",
    "max_steps",
    "cfl",
    "dt_max",
    "sample_interval",
    "extinction_fraction",
    "adaptive",
    "entropy_every",
    "tangent_scales",
];

fn flow_config(cfg: &RunConfig, base: FlowConfig) -> CliResult<FlowConfig> {
    let kind = match cfg.string("kind", if base.kind == FlowKind::Mcf { "mcf" } else { "rescaled" }).as_str() {
        "mcf" => FlowKind::Mcf,
        "rescaled" => FlowKind::Rescaled,
        other => return Err(CliError::Usage(format!("kind must be mcf or rescaled, got {other:?}"))),
    };
    let base = if kind == base.kind {
        base
    } else if kind == FlowKind::Rescaled {
        FlowConfig { kind, sample_interval: 0.1, ..base }
    } else {
        FlowConfig { kind, sample_interval: 0.01, ..base }
    };
    let default_t_max = if kind == FlowKind::Rescaled { 5.0 } else { 10.0 };
    Ok(FlowConfig {
        t_start: cfg.get("t_start", base.t_start)?,
        t_max: cfg.get("t_max", default_t_max)?,
        max_steps: cfg.get("max_steps", base.max_steps)?,
        cfl: cfg.get("cfl", base.cfl)?,
        dt_max: cfg.get("dt_max", base.dt_max)?,
        sample_interval: cfg.get("sample_interval", base.sample_interval)?,
        extinction_fraction: cfg.get("extinction_fraction", base.extinction_fraction)?,
        adaptive: cfg.get("adaptive", base.adaptive)?,
        entropy_every: cfg.get("entropy_every", base.entropy_every)?,
        ..base
    })
}

fn trace_artifacts(report: &mut Report, stem: &str, trace: &FlowTrace) -> CliResult<()> {
    let mut jsonl = Vec::new();
    trace.write_jsonl(&mut jsonl)?;
    let mut csv = Vec::new();
    trace.write_csv(&mut csv)?;
    report.artifacts.push((format!("{stem}.jsonl"), jsonl));
    report.artifacts.push((format!("{stem}.csv"), csv));
    Ok(())
}

fn tangent_json(tc: &TangentCandidate) -> Value {
    json!({
        "classification": tc.classification,
        "singular_point": tc.singular_point,
        "singular_time": tc.singular_time,
        "agreement": tc.agreement,
        "bounded_diameter": tc.bounded_diameter,
        "residual": tc.residual,
        "scales": tc.scales.iter().map(|s| json!({
            "tau": s.tau, "time": s.time, "classification": s.classification,
            "distance": s.distance, "rescaled_diameter": s.rescaled_diameter,
        })).collect::<Vec<_>>(),
    })
}

fn termination_label(t: &Option<Termination>) -> String {
    match t {
        Some(Termination::Extinction { .. }) => "extinction",
        Some(Termination::Singularity { .. }) => "singularity",
        Some(Termination::TimeBudget { .. }) => "time_budget",
        Some(Termination::StepBudget { .. }) => "step_budget",
        Some(Termination::Failed { .. }) => "failed",
        None => "none",
    }
    .into()
}

pub fn flow(cfg: &RunConfig) -> CliResult<Report> {
    cfg.check_keys("flow", &with_keys(FLOW_EXTRA))?;
    let (name, surface) = surfaces::build(cfg, "ellipse")?;
    let fc = flow_config(cfg, FlowConfig { entropy_every: 4, ..FlowConfig::mcf() })?;
    let trace = run_flow(&surface, &fc)?;
    let scales: usize = cfg.get("tangent_scales", 4)?;
    let singular = matches!(trace.termination, Some(Termination::Extinction { .. } | Termination::Singularity { .. }));
    let tangent = if singular && fc.kind == FlowKind::Mcf && scales > 0 {
        extract_tangent(&trace, None, scales).ok()
    } else {
        None
    };
    let audit = trace.audit(1e-6);
    let last = trace.last().map(|s| s.time).unwrap_or(fc.t_start);
    let result = json!({
        "surface": name,
        "kind": fc.kind,
        "termination": trace.termination,
        "steps": trace.steps,
        "rejected_steps": trace.rejected_steps,
        "resamples": trace.resamples,
        "samples": trace.samples.len(),
        "final_time": last,
        "entropy_non_increasing": audit.entropy_non_increasing,
        "max_entropy_increase": audit.max_entropy_increase,
        "tangent": tangent.as_ref().map(tangent_json),
        "trace_files": ["flow_trace.jsonl", "flow_trace.csv"],
    });
    let pairs = [
        ("surface", name.clone()),
        ("termination", termination_label(&trace.termination)),
        (
            "estimated_time",
            trace.termination.as_ref().and_then(Termination::estimated_time).map(num).unwrap_or_default(),
        ),
        ("steps", trace.steps.to_string()),
        ("samples", trace.samples.len().to_string()),
        ("final_time", num(last)),
        ("tangent", tangent.as_ref().map(|t| format!("{:?}", t.classification).to_lowercase()).unwrap_or_default()),
    ];
    let mut report = Report::new("flow", result).table(&["key", "value"], kv_rows(&pairs));
    trace_artifacts(&mut report, "flow_trace", &trace)?;
    report.summary.push(format!("{name}: {} after {} steps", termination_label(&trace.termination), trace.steps));
    if let Some(Termination::Failed { error, .. }) = &trace.termination {
        report.numerical_failure = Some(error.clone());
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// generic

pub const GENERIC_EXTRA: &[&str] = &["epsilon", "cfl", "t_max", "max_steps", "entropy_every", "tangent_scales"];

/// One-line verdict such as "cylinder tangent".
pub fn verdict(r: &GenericReport) -> String {
    match &r.outcome {
        GenericOutcome::RoundExtinction | GenericOutcome::NonCompactSingularity => match r.tangents.last() {
            Some(tc) => format!("{} tangent", format!("{:?}", tc.classification).to_lowercase()),
            None => "no tangent".into(),
        },
        GenericOutcome::JumpAborted { .. } => "jump aborted".into(),
        GenericOutcome::Unclassified { .. } => "unclassified".into(),
    }
}

pub fn generic(cfg: &RunConfig) -> CliResult<Report> {
    cfg.check_keys("generic", &with_keys(GENERIC_EXTRA))?;
    let (name, surface) = surfaces::build(cfg, "dumbbell")?;
    let d = GenericConfig::default();
    let gc = GenericConfig {
        epsilon: cfg.get("epsilon", d.epsilon)?,
        scales: cfg.get("tangent_scales", d.scales)?,
        flow: FlowConfig {
            cfl: cfg.get("cfl", d.flow.cfl)?,
            t_max: cfg.get("t_max", 10.0)?,
            max_steps: cfg.get("max_steps", d.flow.max_steps)?,
            entropy_every: cfg.get("entropy_every", d.flow.entropy_every)?,
            ..d.flow.clone()
        },
        ..d
    };
    let r = generic_piecewise_flow(&surface, &gc)?;
    let v = verdict(&r);
    let audit = r.trace.audit(1e-6);
    let jumps: Vec<Value> = r
        .trace
        .jumps
        .iter()
        .map(|j| {
            json!({
                "time": j.time, "entropy_before": j.entropy_before, "entropy_after": j.entropy_after,
                "drop": j.drop, "dilation": j.dilation, "amplitude": j.amplitude,
                "area_before": j.area_before, "area_after": j.area_after,
            })
        })
        .collect();
    let result = json!({
        "surface": name,
        "verdict": v,
        "outcome": r.outcome,
        "jumps": jumps,
        "tangents": r.tangents.iter().map(tangent_json).collect::<Vec<_>>(),
        "termination": r.trace.termination,
        "steps": r.trace.steps,
        "entropy_non_increasing": audit.entropy_non_increasing,
        "trace_files": ["generic_trace.jsonl", "generic_trace.csv"],
    });
    let pairs = [
        ("surface", name.clone()),
        ("verdict", v.clone()),
        ("jumps", r.trace.jumps.len().to_string()),
        ("entropy_drops", audit.drops.iter().map(|d| num(*d)).collect::<Vec<_>>().join(";")),
        ("termination", termination_label(&r.trace.termination)),
        ("steps", r.trace.steps.to_string()),
    ];
    let mut report = Report::new("generic", result).table(&["key", "value"], kv_rows(&pairs));
    trace_artifacts(&mut report, "generic_trace", &r.trace)?;
    report.summary.push(format!("{name}: {v} ({} jumps)", r.trace.jumps.len()));
    Ok(report)
}
