use std::f64::consts::{E, PI, SQRT_2};

use shrinker_core::flow::{
    extract_tangent, generic_piecewise_flow, monotonicity_audit, run_flow, FlowConfig, FlowTrace, GenericConfig,
    GenericOutcome, Probe, TangentClass, Termination,
};
use shrinker_core::functionals::density_trace;
use shrinker_core::{DiscreteCurve, ProfileSurface, Surface};

fn ellipse_trace() -> FlowTrace {
    let s: Surface = DiscreteCurve::ellipse(2.0, 1.0, 128).unwrap().into();
    run_flow(&s, &FlowConfig { entropy_every: 4, sample_interval: 0.02, ..FlowConfig::mcf() }).unwrap()
}

#[test]
fn ellipse_densities_and_entropy_are_monotone() {
    let trace = ellipse_trace();
    assert!(matches!(trace.termination, Some(Termination::Extinction { .. })));
    let probes = [
        Probe { x0: [0.0, 0.0], t0: 1.05 },
        Probe { x0: [0.5, 0.0], t0: 1.2 },
        Probe { x0: [0.0, 0.3], t0: 1.5 },
        Probe { x0: [1.0, 0.5], t0: 2.0 },
        Probe { x0: [-0.4, 0.2], t0: 3.0 },
    ];
    let report = monotonicity_audit(&trace, &probes, 1e-6).unwrap();
    for p in &report.probes {
        assert!(p.non_increasing, "{:?} rises by {:e}", p.probe, p.max_increase);
        assert!(p.variation > 1e-3, "generic probes see a strict decrease");
    }
    let audit = trace.audit(1e-8);
    assert!(audit.times_increasing && audit.entropy_non_increasing, "{audit:?}");
}

#[test]
fn self_similar_circle_has_constant_density() {
    let s: Surface = DiscreteCurve::circle(SQRT_2, 128).unwrap().into();
    let cfg = FlowConfig { t_start: -1.0, t_max: -0.2, sample_interval: 0.05, ..FlowConfig::mcf() };
    let trace = run_flow(&s, &cfg).unwrap();
    let d = density_trace(&trace, [0.0, 0.0], 0.0).unwrap();
    let target = (2.0 * PI / E).sqrt();
    assert!(d.iter().all(|v| (v - target).abs() < 1e-4), "{d:?}");
    // the exact slices, for comparison
    let exact: Vec<(f64, Surface)> = (0..9)
        .map(|k| {
            let t = -1.0 + 0.1 * k as f64;
            (t, DiscreteCurve::circle(SQRT_2 * (-t).sqrt(), 128).unwrap().into())
        })
        .collect();
    let exact = FlowTrace::from_slices(shrinker_core::flow::FlowKind::Mcf, exact).unwrap();
    let report = monotonicity_audit(&exact, &[Probe { x0: [0.0, 0.0], t0: 0.0 }], 1e-12).unwrap();
    assert!(report.probes[0].variation < 1e-12);
}

#[test]
fn rescaled_ellipse_rounds_off() {
    // scaled to enclosed area 2π, so the MCF singular time about 0 is 1
    let a = (2.0f64 / (1.2 * 0.8)).sqrt();
    let s: Surface = DiscreteCurve::ellipse(1.2 * a, 0.8 * a, 128).unwrap().into();
    let trace = run_flow(&s, &FlowConfig { t_max: 6.0, ..FlowConfig::rescaled() }).unwrap();
    let Surface::Curve(c) = &trace.last().unwrap().surface else { unreachable!() };
    assert!((c.isoperimetric_ratio() - 1.0).abs() < 1e-3);
    let r = c.points().iter().map(|p| p[0].hypot(p[1])).sum::<f64>() / c.points().len() as f64;
    assert!((r - SQRT_2).abs() < 1e-2, "{r}");
}

#[test]
fn sphere_trace_has_a_round_tangent() {
    let s: Surface = ProfileSurface::sphere(1.0, 65).unwrap().into();
    let trace = run_flow(&s, &FlowConfig { extinction_fraction: 1e-4, ..FlowConfig::mcf() }).unwrap();
    let Some(Termination::Extinction { estimated_time, .. }) = trace.termination else { panic!() };
    assert!((estimated_time - 0.25).abs() < 1e-3);
    let tc = extract_tangent(&trace, None, 4).unwrap();
    assert_eq!(tc.classification, TangentClass::Sphere);
    assert!(tc.agreement && tc.bounded_diameter);
    assert!(tc.scales.iter().all(|f| f.distance < 1e-3));
}

#[test]
fn ellipsoid_goes_extinct_roundly() {
    let s: Surface = ProfileSurface::ellipsoid(1.0, 1.6, 129).unwrap().into();
    let cfg =
        GenericConfig { flow: FlowConfig { entropy_every: 0, ..GenericConfig::default().flow }, ..Default::default() };
    let r = generic_piecewise_flow(&s, &cfg).unwrap();
    assert_eq!(r.outcome, GenericOutcome::RoundExtinction);
    assert!(r.trace.jumps.is_empty());
}

#[test]
fn curves_never_jump() {
    let curves: Vec<Surface> =
        vec![DiscreteCurve::ellipse(1.5, 1.0, 96).unwrap().into(), DiscreteCurve::circle(SQRT_2, 96).unwrap().into()];
    for c in curves {
        let r = generic_piecewise_flow(&c, &GenericConfig { flow: FlowConfig::mcf(), ..Default::default() }).unwrap();
        assert!(r.trace.jumps.is_empty());
        assert_eq!(r.outcome, GenericOutcome::RoundExtinction);
    }
}

#[test]
fn open_surfaces_are_rejected_by_the_piecewise_flow() {
    let s: Surface = ProfileSurface::cylinder(SQRT_2, 5.0, 101).unwrap().into();
    assert!(generic_piecewise_flow(&s, &GenericConfig::default()).is_err());
}

#[test]
fn extraction_needs_samples() {
    let s: Surface = DiscreteCurve::circle(1.0, 32).unwrap().into();
    let trace = FlowTrace::from_slices(shrinker_core::flow::FlowKind::Mcf, vec![(0.0, s)]).unwrap();
    assert!(extract_tangent(&trace, None, 3).is_err());
}
