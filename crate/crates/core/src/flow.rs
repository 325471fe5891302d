//! Mean curvature flow and rescaled mean curvature flow on curves and
//! surfaces of revolution.
//!
//! A step moves every node by `δ`, where
//!
//! ```text
//! (I − dt Δ) δ = dt V(x),   V = −H n              (MCF)
//!                           V = (−H + ⟨x,n⟩/2) n  (rescaled flow about 0)
//! ```
//!
//! `Δ` acts componentwise on the ambient coordinates. On a surface of
//! revolution the radial coordinate is the `m = 1` Fourier mode of `x1`, so
//! it sees `Δ − 1/r²`. The scheme is linearly implicit: geometry and
//! curvature are explicit, the smoothing is implicit. Its fixed points are
//! exactly the zeros of `V`, and it is first order in time.
//!
//! Free ends are clamped, poles keep `r = 0`.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{entropy, f_functional_with};
use crate::geometry::{End, LocalGeometry, Model, ResamplePolicy, Surface, SurfaceRecord};
use crate::shrinker;
use crate::spectral;

/// Default step-rejection bound on `max|A|² · dt` after a step.
pub const REJECT_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    Mcf,
    Rescaled,
}

/// A space-time point `(x0, t0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Probe {
    pub x0: [f64; 2],
    pub t0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub kind: FlowKind,
    pub t_start: f64,
    /// Absolute end time.
    pub t_max: f64,
    pub max_steps: usize,
    pub dt_max: f64,
    /// `dt = min(dt_max, cfl / max|A|²)`.
    pub cfl: f64,
    /// Overrides the adaptive step when set.
    pub fixed_dt: Option<f64>,
    pub reject_threshold: f64,
    pub sample_interval: f64,
    /// Also sample whenever max|A| has grown by this factor since the last
    /// sample, so that the approach to a singularity is resolved.
    pub curvature_sample_factor: f64,
    /// Stop when the area drops below this fraction of the initial area.
    pub extinction_fraction: f64,
    /// Stop when max|A| exceeds this multiple of its initial value.
    pub singularity_factor: f64,
    /// Curvature-graded resampling instead of uniform resampling.
    pub adaptive: bool,
    /// Entropy at every `entropy_every`-th sample; 0 disables it.
    pub entropy_every: usize,
    /// `F_{x0,t0}(M_t)` at every sample.
    pub f_probes: Vec<Probe>,
    /// `∫_{M_t} Φ_{(x0,t0)} = F_{x0, t0 − t}(M_t)` at every sample with `t < t0`.
    pub density_probes: Vec<Probe>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            kind: FlowKind::Mcf,
            t_start: 0.0,
            t_max: f64::INFINITY,
            max_steps: 2_000_000,
            dt_max: 1e-2,
            cfl: 2.5e-4,
            fixed_dt: None,
            reject_threshold: REJECT_THRESHOLD,
            sample_interval: 0.01,
            curvature_sample_factor: 1.25,
            extinction_fraction: 1e-2,
            singularity_factor: 1e3,
            adaptive: false,
            entropy_every: 0,
            f_probes: Vec::new(),
            density_probes: Vec::new(),
        }
    }
}

impl FlowConfig {
    pub fn mcf() -> Self {
        Self::default()
    }

    pub fn rescaled() -> Self {
        Self { kind: FlowKind::Rescaled, sample_interval: 0.1, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.dt_max) || !positive(self.cfl) || !positive(self.reject_threshold) {
            return Err(Error::Domain("dt_max, cfl and reject_threshold must be positive".into()));
        }
        if let Some(dt) = self.fixed_dt {
            if !positive(dt) {
                return Err(Error::Domain(format!("fixed dt must be positive, got {dt}")));
            }
        }
        if !(self.t_max > self.t_start) {
            return Err(Error::Domain(format!("t_max = {} must exceed t_start = {}", self.t_max, self.t_start)));
        }
        if !positive(self.sample_interval) || !(self.curvature_sample_factor > 1.0) {
            return Err(Error::Domain("sampling schedule must be positive and growing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Monitors {
    pub step: usize,
    pub dt: f64,
    pub nodes: usize,
    pub area: f64,
    /// Enclosed area of a closed curve.
    pub enclosed_area: Option<f64>,
    pub max_a: f64,
    pub entropy: Option<f64>,
    pub f_values: Vec<f64>,
    pub density: Vec<Option<f64>>,
}

#[derive(Debug, Clone)]
pub struct FlowSample {
    pub time: f64,
    /// Index of the smooth piece this sample belongs to.
    pub leg: usize,
    pub surface: Surface,
    pub monitors: Monitors,
}

/// Replacement of `old` by `new` at `time`.
#[derive(Debug, Clone)]
pub struct Jump {
    pub time: f64,
    pub old: Surface,
    pub new: Surface,
    pub entropy_before: f64,
    pub entropy_after: f64,
    pub drop: f64,
    /// Factor applied to the replacement to restore the area.
    pub dilation: f64,
    pub amplitude: f64,
    pub area_before: f64,
    pub area_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Termination {
    Extinction { time: f64, estimated_time: f64 },
    Singularity { time: f64, max_a: f64, estimated_time: f64 },
    TimeBudget { time: f64 },
    StepBudget { time: f64 },
    Failed { time: f64, error: String },
}

impl Termination {
    pub fn estimated_time(&self) -> Option<f64> {
        match self {
            Termination::Extinction { estimated_time, .. } | Termination::Singularity { estimated_time, .. } => {
                Some(*estimated_time)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub kind: FlowKind,
    pub samples: Vec<FlowSample>,
    pub jumps: Vec<Jump>,
    pub termination: Option<Termination>,
    pub steps: usize,
    pub rejected_steps: usize,
    pub resamples: usize,
}

impl Default for FlowTrace {
    fn default() -> Self {
        Self::new(FlowKind::Mcf)
    }
}

#[derive(Serialize)]
struct SampleLine<'a> {
    record: &'static str,
    leg: usize,
    time: f64,
    monitors: &'a Monitors,
    surface: SurfaceRecord,
}

#[derive(Serialize)]
struct JumpLine {
    record: &'static str,
    time: f64,
    entropy_before: f64,
    entropy_after: f64,
    drop: f64,
    dilation: f64,
    amplitude: f64,
    area_before: f64,
    area_after: f64,
    old: SurfaceRecord,
    new: SurfaceRecord,
}

#[derive(Serialize)]
struct EndLine<'a> {
    record: &'static str,
    termination: &'a Option<Termination>,
    steps: usize,
    rejected_steps: usize,
    resamples: usize,
}

impl FlowTrace {
    pub fn new(kind: FlowKind) -> Self {
        Self {
            kind,
            samples: Vec::new(),
            jumps: Vec::new(),
            termination: None,
            steps: 0,
            rejected_steps: 0,
            resamples: 0,
        }
    }

    /// Trace from given slices (no monitors beyond area and curvature).
    pub fn from_slices(kind: FlowKind, slices: Vec<(f64, Surface)>) -> Result<Self> {
        let mut trace = Self::new(kind);
        for (time, surface) in slices {
            let g = surface.local_geometry()?;
            let monitors = Monitors {
                step: 0,
                dt: 0.0,
                nodes: g.len(),
                area: g.measure.iter().sum(),
                enclosed_area: enclosed_area(&surface),
                max_a: g.max_abs_a(),
                entropy: None,
                f_values: Vec::new(),
                density: Vec::new(),
            };
            trace.samples.push(FlowSample { time, leg: 0, surface, monitors });
        }
        Ok(trace)
    }

    pub fn last(&self) -> Option<&FlowSample> {
        self.samples.last()
    }

    /// One JSON object per line: samples, then jumps, then a closing record.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for s in &self.samples {
            let line = SampleLine {
                record: "sample",
                leg: s.leg,
                time: s.time,
                monitors: &s.monitors,
                surface: SurfaceRecord::from_surface(&s.surface),
            };
            writeln!(w, "{}", serde_json::to_string(&line).map_err(std::io::Error::other)?)?;
        }
        for j in &self.jumps {
            let line = JumpLine {
                record: "jump",
                time: j.time,
                entropy_before: j.entropy_before,
                entropy_after: j.entropy_after,
                drop: j.drop,
                dilation: j.dilation,
                amplitude: j.amplitude,
                area_before: j.area_before,
                area_after: j.area_after,
                old: SurfaceRecord::from_surface(&j.old),
                new: SurfaceRecord::from_surface(&j.new),
            };
            writeln!(w, "{}", serde_json::to_string(&line).map_err(std::io::Error::other)?)?;
        }
        let end = EndLine {
            record: "end",
            termination: &self.termination,
            steps: self.steps,
            rejected_steps: self.rejected_steps,
            resamples: self.resamples,
        };
        writeln!(w, "{}", serde_json::to_string(&end).map_err(std::io::Error::other)?)
    }

    /// Monitor table, one row per sample.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let nf = self.samples.first().map_or(0, |s| s.monitors.f_values.len());
        let nd = self.samples.first().map_or(0, |s| s.monitors.density.len());
        let mut header = String::from("leg,time,step,dt,nodes,area,enclosed_area,max_a,entropy");
        for k in 0..nf {
            header.push_str(&format!(",f_{k}"));
        }
        for k in 0..nd {
            header.push_str(&format!(",density_{k}"));
        }
        writeln!(w, "{header}")?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
        for s in &self.samples {
            let m = &s.monitors;
            let mut row = format!(
                "{},{:e},{},{:e},{},{:e},{},{:e},{}",
                s.leg,
                s.time,
                m.step,
                m.dt,
                m.nodes,
                m.area,
                opt(m.enclosed_area),
                m.max_a,
                opt(m.entropy)
            );
            for v in &m.f_values {
                row.push_str(&format!(",{v:e}"));
            }
            for v in &m.density {
                row.push(',');
                row.push_str(&opt(*v));
            }
            writeln!(w, "{row}")?;
        }
        Ok(())
    }

    /// Checks the piecewise-flow invariants.
    pub fn audit(&self, entropy_tol: f64) -> TraceAudit {
        let times_increasing = self.samples.windows(2).all(|w| {
            if w[0].leg == w[1].leg {
                w[1].time > w[0].time
            } else {
                w[1].time >= w[0].time
            }
        });
        let mut series: Vec<f64> = Vec::new();
        for s in &self.samples {
            if let Some(e) = s.monitors.entropy {
                series.push(e);
            }
        }
        let max_entropy_increase = series.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        let area_defects: Vec<f64> =
            self.jumps.iter().map(|j| (j.area_after - j.area_before).abs() / j.area_before).collect();
        let drops: Vec<f64> = self.jumps.iter().map(|j| j.drop).collect();
        TraceAudit {
            times_increasing,
            entropy_non_increasing: series.len() < 2 || max_entropy_increase <= entropy_tol,
            max_entropy_increase: if series.len() < 2 { 0.0 } else { max_entropy_increase },
            area_defects,
            drops,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceAudit {
    pub times_increasing: bool,
    pub entropy_non_increasing: bool,
    pub max_entropy_increase: f64,
    pub area_defects: Vec<f64>,
    pub drops: Vec<f64>,
}

fn enclosed_area(s: &Surface) -> Option<f64> {
    match s {
        Surface::Curve(c) if c.is_closed() => Some(c.signed_area().abs()),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// linear algebra

/// Solves the tridiagonal system `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = d[i]`
/// in place (Thomas algorithm). `sub[0]` and `sup[n-1]` are ignored.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], d: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    c[0] = sup[0] / beta;
    d[0] /= beta;
    for i in 1..n {
        beta = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / beta;
        d[i] = (d[i] - sub[i] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
}

/// Cyclic variant: `sub[0]` couples row 0 to `x[n-1]`, `sup[n-1]` couples
/// row `n-1` to `x[0]` (Sherman–Morrison on the corner entries).
fn cyclic_thomas(sub: &[f64], diag: &[f64], sup: &[f64], d: &mut [f64]) {
    let n = diag.len();
    let (beta, alpha) = (sub[0], sup[n - 1]);
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] -= gamma;
    bb[n - 1] -= alpha * beta / gamma;
    thomas(sub, &bb, sup, d);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    thomas(sub, &bb, sup, &mut u);
    let fact = (d[0] + beta * d[n - 1] / gamma) / (1.0 + u[0] + beta * u[n - 1] / gamma);
    for (x, z) in d.iter_mut().zip(&u) {
        *x -= fact * z;
    }
}

// ---------------------------------------------------------------------------
// steps

fn velocity(g: &LocalGeometry, kind: FlowKind) -> Vec<[f64; 2]> {
    (0..g.len())
        .map(|i| {
            let speed = match kind {
                FlowKind::Mcf => -g.mean_curvature[i],
                FlowKind::Rescaled => -g.mean_curvature[i] + 0.5 * g.support(i),
            };
            [speed * g.normal[i][0], speed * g.normal[i][1]]
        })
        .collect()
}

fn displaced_nodes(g: &LocalGeometry, dt: f64, kind: FlowKind) -> Vec<[f64; 2]> {
    let n = g.len();
    let v = velocity(g, kind);
    let mut conductance_prev = vec![0.0; n];
    let mut conductance_next = vec![0.0; n];
    for e in &g.edges {
        let c = e.flux_area / e.length;
        let (a, b) = if e.b == (e.a + 1) % n { (e.a, e.b) } else { (e.b, e.a) };
        conductance_next[a] += c;
        conductance_prev[b] += c;
    }
    let periodic = g.ends[0] == End::Periodic;
    let mut out = g.position.clone();
    for k in 0..2 {
        let radial = g.model == Model::Axisymmetric && k == 0;
        let mut sub = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let clamped = (g.ends[0] == End::Free && i == 0)
                || (g.ends[1] == End::Free && i == n - 1)
                || (radial && g.is_pole(i));
            if clamped {
                continue;
            }
            let cell = g.cell[i];
            sub[i] = -dt * conductance_prev[i] / cell;
            sup[i] = -dt * conductance_next[i] / cell;
            diag[i] = 1.0 + dt * (conductance_prev[i] + conductance_next[i]) / cell;
            if radial {
                diag[i] += dt / (g.position[i][0] * g.position[i][0]);
            }
            rhs[i] = dt * v[i][k];
        }
        if periodic {
            cyclic_thomas(&sub, &diag, &sup, &mut rhs);
        } else {
            thomas(&sub, &diag, &sup, &mut rhs);
        }
        for i in 0..n {
            out[i][k] += rhs[i];
        }
    }
    out
}

fn advance(
    surface: &Surface,
    g: &LocalGeometry,
    dt: f64,
    kind: FlowKind,
    threshold: f64,
    time: f64,
) -> Result<(Surface, LocalGeometry)> {
    let reject = |reason: String| Error::StepRejected { time, reason };
    let nodes = displaced_nodes(g, dt, kind);
    if nodes.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(reject("non-finite node".into()));
    }
    let next = surface.with_nodes(nodes).map_err(|e| reject(e.to_string()))?;
    let ng = next.local_geometry().map_err(|e| reject(e.to_string()))?;
    let a = ng.max_abs_a();
    if a * a * dt > threshold {
        return Err(reject(format!("max|A|² dt = {:.3e} exceeds {threshold}", a * a * dt)));
    }
    Ok((next, ng))
}

/// One MCF step of size `dt`, followed by uniform resampling when the edge
/// ratio has degraded.
pub fn mcf_step(surface: &Surface, dt: f64) -> Result<Surface> {
    let g = surface.local_geometry()?;
    advance(surface, &g, dt, FlowKind::Mcf, REJECT_THRESHOLD, 0.0)?.0.resample_if_needed()
}

/// One step of the rescaled flow about the origin.
pub fn rescaled_step(surface: &Surface, ds: f64) -> Result<Surface> {
    let g = surface.local_geometry()?;
    advance(surface, &g, ds, FlowKind::Rescaled, REJECT_THRESHOLD, 0.0)?.0.resample_if_needed()
}

// ---------------------------------------------------------------------------
// driver

fn graded_policy(g: &LocalGeometry, base: f64, max_count: usize) -> ResamplePolicy {
    let spacing = g.a_squared.iter().map(|a2| base.min(0.15 / a2.sqrt().max(1e-300))).collect();
    ResamplePolicy::Graded { spacing, grading: 0.05, max_count }
}

fn under_resolved(g: &LocalGeometry) -> bool {
    g.edges.iter().any(|e| {
        let a = g.a_squared[e.a].max(g.a_squared[e.b]).sqrt();
        e.length * a > 0.3
    })
}

/// Singular time from the last two `(t, max|A|)` pairs, assuming
/// `max|A|⁻²` is linear in `t` near the singularity.
pub fn richardson_singular_time(t1: f64, a1: f64, t2: f64, a2: f64) -> f64 {
    let (y1, y2) = (1.0 / (a1 * a1), 1.0 / (a2 * a2));
    if y1 > y2 {
        t2 + y2 * (t2 - t1) / (y1 - y2)
    } else {
        t2
    }
}

fn monitors(
    surface: &Surface,
    g: &LocalGeometry,
    time: f64,
    step: usize,
    dt: f64,
    with_entropy: bool,
    cfg: &FlowConfig,
) -> Monitors {
    let f_values =
        cfg.f_probes.iter().map(|p| f_functional_with(g, p.x0, p.t0).map_or(f64::NAN, |f| f.value)).collect();
    let density = cfg
        .density_probes
        .iter()
        .map(|p| if p.t0 > time { f_functional_with(g, p.x0, p.t0 - time).ok().map(|f| f.value) } else { None })
        .collect();
    Monitors {
        step,
        dt,
        nodes: g.len(),
        area: g.measure.iter().sum(),
        enclosed_area: enclosed_area(surface),
        max_a: g.max_abs_a(),
        entropy: if with_entropy { entropy(surface).ok().map(|e| e.lambda) } else { None },
        f_values,
        density,
    }
}

/// Integrates the flow from `initial` until extinction, a curvature
/// singularity, or the time/step budget. Step failures end the run and are
/// reported in [`FlowTrace::termination`] together with the trace so far.
pub fn run_flow(initial: &Surface, cfg: &FlowConfig) -> Result<FlowTrace> {
    cfg.validate()?;
    let mut trace = FlowTrace::new(cfg.kind);
    let mut surface = initial.clone();
    let mut g = surface.local_geometry()?;
    let a0 = g.max_abs_a();
    let area0: f64 = g.measure.iter().sum();
    let base_spacing = g.edges.iter().map(|e| e.length).sum::<f64>() / g.edges.len() as f64;
    let max_count = 16 * g.len();
    let mut t = cfg.t_start;
    let mut samples_taken = 0usize;
    let mut push = |trace: &mut FlowTrace, s: &Surface, g: &LocalGeometry, t: f64, step: usize, dt: f64| {
        let with_entropy = cfg.entropy_every > 0 && samples_taken.is_multiple_of(cfg.entropy_every);
        samples_taken += 1;
        let m = monitors(s, g, t, step, dt, with_entropy, cfg);
        trace.samples.push(FlowSample { time: t, leg: 0, surface: s.clone(), monitors: m });
    };
    push(&mut trace, &surface, &g, t, 0, 0.0);
    let mut next_sample = t + cfg.sample_interval;
    let mut last_sample_a = a0;
    // (t, max|A|) history for the singular-time estimate
    let mut history: Vec<(f64, f64)> = vec![(t, a0)];
    loop {
        let span = cfg.t_max - t;
        if span <= 1e-12 * (1.0 + t.abs()) {
            trace.termination = Some(Termination::TimeBudget { time: t });
            break;
        }
        if trace.steps >= cfg.max_steps {
            trace.termination = Some(Termination::StepBudget { time: t });
            break;
        }
        let amax = g.max_abs_a();
        let mut dt = cfg.fixed_dt.unwrap_or_else(|| cfg.dt_max.min(cfg.cfl / (amax * amax)));
        let last_step = dt >= span;
        dt = dt.min(span);
        let mut attempts = 0;
        let result = loop {
            match advance(&surface, &g, dt, cfg.kind, cfg.reject_threshold, t) {
                Err(Error::StepRejected { .. }) if attempts < 30 => {
                    dt *= 0.5;
                    attempts += 1;
                    trace.rejected_steps += 1;
                }
                other => break other,
            }
        };
        let (next, ng) = match result {
            Ok(v) => v,
            Err(e) => {
                trace.termination = Some(Termination::Failed { time: t, error: e.to_string() });
                break;
            }
        };
        t = if last_step && attempts == 0 { cfg.t_max } else { t + dt };
        trace.steps += 1;
        surface = next;
        g = ng;
        let resampled = if cfg.adaptive {
            if surface.edge_ratio() > 1.5 || under_resolved(&g) {
                Some(surface.resample(&graded_policy(&g, base_spacing, max_count)))
            } else {
                None
            }
        } else if surface.edge_ratio() > crate::geometry::RESAMPLE_TRIGGER {
            Some(surface.resample(&ResamplePolicy::uniform(surface.len())))
        } else {
            None
        };
        if let Some(r) = resampled {
            match r.and_then(|s| s.local_geometry().map(|lg| (s, lg))) {
                Ok((s, lg)) => {
                    surface = s;
                    g = lg;
                    trace.resamples += 1;
                }
                Err(e) => {
                    trace.termination = Some(Termination::Failed { time: t, error: e.to_string() });
                    break;
                }
            }
        }
        let area: f64 = g.measure.iter().sum();
        let amax = g.max_abs_a();
        let extinct = area < cfg.extinction_fraction * area0;
        let singular = a0 > 0.0 && amax > cfg.singularity_factor * a0;
        let done = extinct || singular || t >= cfg.t_max;
        if t >= next_sample || amax >= cfg.curvature_sample_factor * last_sample_a || done {
            let steps = trace.steps;
            push(&mut trace, &surface, &g, t, steps, dt);
            while next_sample <= t {
                next_sample += cfg.sample_interval;
            }
            last_sample_a = amax;
        }
        history.push((t, amax));
        if history.len() > 2 {
            history.remove(0);
        }
        if extinct || singular {
            let (t1, a1) = history[0];
            let estimated_time = richardson_singular_time(t1, a1, t, amax);
            trace.termination = Some(if extinct {
                Termination::Extinction { time: t, estimated_time }
            } else {
                Termination::Singularity { time: t, max_a: amax, estimated_time }
            });
            break;
        }
    }
    Ok(trace)
}

// ---------------------------------------------------------------------------
// tangent flows

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TangentClass {
    Sphere,
    Cylinder,
    Circle,
    Line,
    Other,
}

/// Relative distance below which a rescaled slice matches a model shrinker.
pub const MATCH_TOLERANCE: f64 = 0.05;
/// Half-width (in rescaled units) of the window used for non-compact models.
pub const TANGENT_WINDOW: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleFit {
    /// `T − t` of the slice.
    pub tau: f64,
    pub time: f64,
    pub sample: usize,
    pub classification: TangentClass,
    /// Distance to the matched model (or to the nearest one), relative to its scale.
    pub distance: f64,
    pub rescaled_diameter: f64,
    /// `(x − x0)/√(T − t)` in model coordinates.
    pub rescaled: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangentCandidate {
    pub singular_point: [f64; 2],
    pub singular_time: f64,
    pub scales: Vec<ScaleFit>,
    /// Classification at the finest scale.
    pub classification: TangentClass,
    /// All scales agree.
    pub agreement: bool,
    pub bounded_diameter: bool,
    /// Weighted L² shrinker residual of the finest slice, when it is a valid surface.
    pub residual: Option<f64>,
}

/// Singular point estimate from the last slice: the extinction point of a
/// compact slice, the tube centre of a collapsing ring, or the max|A| node.
pub fn singular_point_estimate(surface: &Surface) -> Result<[f64; 2]> {
    let g = surface.local_geometry()?;
    let imax = (0..g.len()).max_by(|&a, &b| g.a_squared[a].total_cmp(&g.a_squared[b])).unwrap_or(0);
    Ok(match surface {
        Surface::Curve(c) if c.is_closed() => polygon_centroid(surface.nodes()),
        Surface::Curve(_) => g.position[imax],
        Surface::Profile(p) => match p.topology() {
            crate::geometry::ProfileTopology::TorusLike => polygon_centroid(surface.nodes()),
            _ => {
                // a slice that is small compared with its curvature radius is
                // collapsing to a point on the axis; otherwise a neck forms
                let diam = surface.diameter();
                if diam * g.max_abs_a() < 4.0 {
                    [0.0, surface.centroid()?[1]]
                } else {
                    [0.0, g.position[imax][1]]
                }
            }
        },
    })
}

fn polygon_centroid(p: &[[f64; 2]]) -> [f64; 2] {
    let n = p.len();
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (u, v) = (p[i], p[(i + 1) % n]);
        let cross = u[0] * v[1] - v[0] * u[1];
        a += cross;
        cx += (u[0] + v[0]) * cross;
        cy += (u[1] + v[1]) * cross;
    }
    [cx / (3.0 * a), cy / (3.0 * a)]
}

fn mean_point(p: &[[f64; 2]]) -> [f64; 2] {
    let n = p.len() as f64;
    let s = p.iter().fold([0.0, 0.0], |s, q| [s[0] + q[0], s[1] + q[1]]);
    [s[0] / n, s[1] / n]
}

/// Least-squares (algebraic) circle centre; insensitive to node spacing
/// for points on a circle.
fn fitted_centre(p: &[[f64; 2]]) -> [f64; 2] {
    let c = mean_point(p);
    let (mut suu, mut suv, mut svv, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for q in p {
        let (u, v) = (q[0] - c[0], q[1] - c[1]);
        let w = u * u + v * v;
        suu += u * u;
        suv += u * v;
        svv += v * v;
        r1 += u * w;
        r2 += v * w;
    }
    let det = suu * svv - suv * suv;
    if det.abs() < 1e-300 {
        return c;
    }
    [c[0] + 0.5 * (r1 * svv - r2 * suv) / det, c[1] + 0.5 * (r2 * suu - r1 * suv) / det]
}

fn circle_deviation(p: &[[f64; 2]], centre: [f64; 2], radius: f64) -> f64 {
    p.iter().map(|q| ((q[0] - centre[0]).hypot(q[1] - centre[1]) - radius).abs()).fold(0.0, f64::max) / radius
}

/// Largest distance from the points within the window to their best-fit
/// line, relative to the window.
fn line_deviation(p: &[[f64; 2]], window: f64) -> f64 {
    let pts: Vec<[f64; 2]> = p.iter().filter(|q| q[0].hypot(q[1]) <= window).copied().collect();
    if pts.len() < 3 {
        return f64::INFINITY;
    }
    let c = mean_point(&pts);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for q in &pts {
        let (x, y) = (q[0] - c[0], q[1] - c[1]);
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let normal = [-angle.sin(), angle.cos()];
    pts.iter().map(|q| ((q[0] - c[0]) * normal[0] + (q[1] - c[1]) * normal[1]).abs()).fold(0.0, f64::max) / window
}

fn classify(surface: &Surface, p: &[[f64; 2]], off_axis: bool) -> (TangentClass, f64) {
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut fits: Vec<(TangentClass, f64)> = Vec::new();
    match surface {
        Surface::Curve(c) => {
            if c.is_closed() {
                fits.push((TangentClass::Circle, circle_deviation(p, fitted_centre(p), sqrt2)));
            }
            fits.push((TangentClass::Line, line_deviation(p, 3.0)));
        }
        Surface::Profile(_) if off_axis => {
            // the meridian section of a collapsing ring is a shrinking circle;
            // the ring itself straightens out, so the limit is a cylinder
            let near: Vec<[f64; 2]> = p.iter().filter(|q| q[0].hypot(q[1]) <= 4.0).copied().collect();
            if near.len() >= 8 {
                fits.push((TangentClass::Cylinder, circle_deviation(&near, fitted_centre(&near), sqrt2)));
            }
        }
        Surface::Profile(_) => {
            let zc = fitted_centre(p)[1];
            fits.push((TangentClass::Sphere, circle_deviation(p, [0.0, zc], 2.0)));
            let window: Vec<f64> = p.iter().filter(|q| q[1].abs() <= TANGENT_WINDOW).map(|q| q[0]).collect();
            if window.len() >= 3 {
                let d = window.iter().map(|r| (r - sqrt2).abs()).fold(0.0, f64::max) / sqrt2;
                fits.push((TangentClass::Cylinder, d));
            }
        }
    }
    let best = fits.into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap_or((TangentClass::Other, f64::INFINITY));
    if best.1 < MATCH_TOLERANCE {
        best
    } else {
        (TangentClass::Other, best.1)
    }
}

/// Parabolic rescalings `(x − x0)/√(T − t)` of the last leg of `trace` at
/// `scales` dyadic gaps `T − t = 2^j (T − t_last)`, each classified against
/// the model shrinkers. Disagreement between scales is reported, not resolved.
pub fn extract_tangent(trace: &FlowTrace, point: Option<[f64; 2]>, scales: usize) -> Result<TangentCandidate> {
    let last = trace.samples.last().ok_or_else(|| Error::Flow("empty trace".into()))?;
    let leg: Vec<(usize, &FlowSample)> = trace.samples.iter().enumerate().filter(|(_, s)| s.leg == last.leg).collect();
    if leg.len() < 2 || scales == 0 {
        return Err(Error::Flow("insufficient pre-singular samples".into()));
    }
    let singular_time = match trace.termination.as_ref().and_then(|t| t.estimated_time()) {
        Some(t) => t,
        None => {
            let (a, b) = (leg[leg.len() - 2].1, leg[leg.len() - 1].1);
            richardson_singular_time(a.time, a.monitors.max_a, b.time, b.monitors.max_a)
        }
    };
    let tau_last = singular_time - last.time;
    if !(tau_last > 0.0) {
        return Err(Error::Flow(format!("singular time {singular_time} does not lie after the trace")));
    }
    let x0 = match point {
        Some(p) => p,
        None => singular_point_estimate(&last.surface)?,
    };
    let off_axis = matches!(last.surface, Surface::Profile(_)) && x0[0] > 0.0;
    let mut fits = Vec::with_capacity(scales);
    for j in 0..scales {
        let target = tau_last * 2f64.powi(j as i32);
        let &(index, sample) = leg
            .iter()
            .filter(|(_, s)| s.time < singular_time)
            .min_by(|a, b| {
                let da = ((singular_time - a.1.time) / target).ln().abs();
                let db = ((singular_time - b.1.time) / target).ln().abs();
                da.total_cmp(&db)
            })
            .ok_or_else(|| Error::Flow("insufficient pre-singular samples".into()))?;
        let tau = singular_time - sample.time;
        if (tau / target).ln().abs() > 2f64.ln() / 2.0 + 1e-12 {
            return Err(Error::Flow(format!("no sample near T − t = {target:.3e}")));
        }
        let c = 1.0 / tau.sqrt();
        let rescaled: Vec<[f64; 2]> =
            sample.surface.nodes().iter().map(|q| [c * (q[0] - x0[0]), c * (q[1] - x0[1])]).collect();
        let (classification, distance) = classify(&sample.surface, &rescaled, off_axis);
        fits.push(ScaleFit {
            tau,
            time: sample.time,
            sample: index,
            classification,
            distance,
            rescaled_diameter: c * sample.surface.diameter(),
            rescaled,
        });
    }
    let classification = fits[0].classification;
    let agreement = fits.iter().all(|f| f.classification == classification);
    let (dmin, dmax) = fits
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), f| (lo.min(f.rescaled_diameter), hi.max(f.rescaled_diameter)));
    let bounded_diameter = dmax <= 1.5 * dmin;
    let residual = if off_axis {
        None
    } else {
        let finest = &fits[0];
        let dilated = last.surface.translate([0.0, -x0[1]]).and_then(|s| s.dilate(1.0 / finest.tau.sqrt()));
        match (&last.surface, dilated) {
            (Surface::Profile(_), Ok(s)) => shrinker::residual(&s).ok().map(|r| r.weighted_l2),
            (Surface::Curve(_), _) => last
                .surface
                .translate([-x0[0], -x0[1]])
                .and_then(|s| s.dilate(1.0 / finest.tau.sqrt()))
                .and_then(|s| shrinker::residual(&s))
                .ok()
                .map(|r| r.weighted_l2),
            _ => None,
        }
    };
    Ok(TangentCandidate {
        singular_point: x0,
        singular_time,
        scales: fits,
        classification,
        agreement,
        bounded_diameter,
        residual,
    })
}

// ---------------------------------------------------------------------------
// piecewise flow

#[derive(Debug, Clone, PartialEq)]
pub struct GenericConfig {
    pub flow: FlowConfig,
    /// Required entropy drop per replacement.
    pub epsilon: f64,
    /// A start surface with weighted shrinker residual below this value is
    /// treated as a slice of a self-similar flow with singular point
    /// `(0, t_start + 1)`, and first follows the rescaled flow.
    pub seed_residual: f64,
    pub rescaled_leg: f64,
    /// Amplitudes `2^{-k} s0` for `k < amplitude_steps`.
    pub amplitude_steps: usize,
    pub scales: usize,
}

impl Default for GenericConfig {
    fn default() -> Self {
        Self {
            flow: FlowConfig {
                cfl: 2e-3,
                adaptive: true,
                entropy_every: 8,
                extinction_fraction: 1e-5,
                ..FlowConfig::mcf()
            },
            epsilon: 1e-3,
            seed_residual: 1e-2,
            rescaled_leg: 0.25,
            amplitude_steps: 12,
            scales: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum GenericOutcome {
    RoundExtinction,
    NonCompactSingularity,
    /// No replacement reached the required entropy drop.
    JumpAborted {
        reason: String,
    },
    /// The flow ended without a recognizable tangent flow.
    Unclassified {
        reason: String,
    },
}

#[derive(Debug, Clone)]
pub struct GenericReport {
    pub trace: FlowTrace,
    pub tangents: Vec<TangentCandidate>,
    pub outcome: GenericOutcome,
}

fn append_leg(into: &mut FlowTrace, leg: FlowTrace, index: usize, skip_first: bool) {
    let skip = usize::from(skip_first);
    into.samples.extend(leg.samples.into_iter().skip(skip).map(|mut s| {
        s.leg = index;
        s
    }));
    into.steps += leg.steps;
    into.rejected_steps += leg.rejected_steps;
    into.resamples += leg.resamples;
    into.termination = leg.termination;
}

fn matches_round_model(s: &Surface) -> bool {
    let sqrt2 = std::f64::consts::SQRT_2;
    let p = s.nodes();
    match s {
        Surface::Curve(_) => circle_deviation(p, [0.0, 0.0], sqrt2) < MATCH_TOLERANCE,
        Surface::Profile(pr) => match pr.topology() {
            crate::geometry::ProfileTopology::SphereLike => circle_deviation(p, [0.0, 0.0], 2.0) < MATCH_TOLERANCE,
            crate::geometry::ProfileTopology::CylinderLike => {
                p.iter().map(|q| (q[0] - sqrt2).abs()).fold(0.0, f64::max) / sqrt2 < MATCH_TOLERANCE
            }
            crate::geometry::ProfileTopology::TorusLike => false,
        },
    }
}

/// Entropy-decreasing perturbation of a near-shrinker along its lowest
/// eigenfunction: the first amplitude on the geometric grid (both signs)
/// whose entropy drop reaches `epsilon`.
fn replacement(candidate: &Surface, cfg: &GenericConfig) -> Result<(Surface, f64, f64, f64)> {
    let g = candidate.local_geometry()?;
    let op = spectral::assemble_l_with(&g, 0, spectral::Boundary::Natural)?;
    let u = spectral::eigen(&op, 1)?.eigenfunctions.remove(0);
    let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lambda = entropy(candidate)?.lambda;
    let s0 = 0.45 / (umax * g.max_abs_a());
    let mut best: Option<(f64, f64)> = None;
    for k in 0..cfg.amplitude_steps {
        let s = s0 * 0.5f64.powi(k as i32);
        for sign in [-1.0, 1.0] {
            let Ok(gamma) = candidate.normal_graph_with(&g, &u, sign * s) else { continue };
            let Ok(e) = entropy(&gamma) else { continue };
            let drop = lambda - e.lambda;
            if best.is_none_or(|(d, _)| drop > d) {
                best = Some((drop, sign * s));
            }
            if drop >= cfg.epsilon {
                return Ok((gamma, sign * s, lambda, e.lambda));
            }
        }
    }
    let (d, s) = best.unwrap_or((f64::NAN, 0.0));
    Err(Error::Flow(format!("largest entropy drop {d:.3e} at amplitude {s:.3e} is below {:.1e}", cfg.epsilon)))
}

/// Piecewise MCF: smooth legs, tangent-flow classification at each
/// singularity, and an entropy-decreasing replacement when the tangent is
/// not a generic (round) shrinker. Curves never jump.
pub fn generic_piecewise_flow(initial: &Surface, cfg: &GenericConfig) -> Result<GenericReport> {
    if !initial.is_closed() {
        return Err(Error::Unsupported("the piecewise flow needs a closed initial surface".into()));
    }
    let mut trace = FlowTrace::new(FlowKind::Mcf);
    let mut tangents = Vec::new();
    let mut t = cfg.flow.t_start;
    let mut current = initial.clone();
    let mut leg = 0usize;

    let seeded = shrinker::residual(initial).map(|r| r.weighted_l2 < cfg.seed_residual).unwrap_or(false);
    if seeded {
        // M_t = √(T − t) Σ_s with T = t_start + 1 and s = −ln(T − t)
        let big_t = t + 1.0;
        let rcfg = FlowConfig {
            kind: FlowKind::Rescaled,
            t_start: 0.0,
            t_max: cfg.rescaled_leg,
            sample_interval: cfg.rescaled_leg / 5.0,
            adaptive: false,
            f_probes: Vec::new(),
            density_probes: Vec::new(),
            ..cfg.flow.clone()
        };
        let rescaled = run_flow(initial, &rcfg)?;
        if let Some(Termination::Failed { error, .. }) = &rescaled.termination {
            return Err(Error::Flow(format!("rescaled leg failed: {error}")));
        }
        let mut physical = Vec::new();
        for s in &rescaled.samples {
            let scale = (-s.time).exp().sqrt();
            let surface = s.surface.dilate(scale)?.translate([0.0, 0.0])?;
            physical.push((big_t - (-s.time).exp(), surface));
        }
        let candidate = rescaled.samples.last().unwrap().surface.clone();
        let (t_j, old) = physical.last().unwrap().clone();
        let mut slices = FlowTrace::from_slices(FlowKind::Mcf, physical)?;
        for (k, s) in slices.samples.iter_mut().enumerate() {
            if cfg.flow.entropy_every > 0 && (k % cfg.flow.entropy_every == 0 || k + 1 == rescaled.samples.len()) {
                s.monitors.entropy = Some(entropy(&s.surface)?.lambda);
            }
        }
        trace.samples = slices.samples;
        trace.steps = rescaled.steps;
        t = t_j;
        current = old.clone();
        if !matches_round_model(&candidate) {
            if matches!(candidate, Surface::Curve(_)) {
                return Ok(GenericReport {
                    trace,
                    tangents,
                    outcome: GenericOutcome::Unclassified { reason: "curve seed is not a round shrinker".into() },
                });
            }
            let (gamma, amplitude) = match replacement(&candidate, cfg) {
                Ok((gamma, amplitude, _, _)) => (gamma, amplitude),
                Err(e) => {
                    return Ok(GenericReport {
                        trace,
                        tangents,
                        outcome: GenericOutcome::JumpAborted { reason: e.to_string() },
                    })
                }
            };
            let scale = (big_t - t_j).sqrt();
            let mapped = gamma.dilate(scale)?;
            let area_before = old.area()?;
            let dilation = (area_before / mapped.area()?).powf(1.0 / old.dim() as f64);
            let new = mapped.dilate(dilation)?;
            let area_after = new.area()?;
            let entropy_before = entropy(&old)?.lambda;
            let entropy_after = entropy(&new)?.lambda;
            trace.jumps.push(Jump {
                time: t_j,
                old,
                new: new.clone(),
                entropy_before,
                entropy_after,
                drop: entropy_before - entropy_after,
                dilation,
                amplitude,
                area_before,
                area_after,
            });
            if let Some(s) = trace.samples.last_mut() {
                s.monitors.entropy = Some(entropy_before);
            }
            leg += 1;
            current = new;
        }
    }

    let mcf = FlowConfig { kind: FlowKind::Mcf, t_start: t, t_max: f64::INFINITY, ..cfg.flow.clone() };
    let run = run_flow(&current, &mcf)?;
    append_leg(&mut trace, run, leg, false);
    if let Some(Termination::Failed { error, .. }) = &trace.termination {
        let reason = format!("flow failed: {error}");
        return Ok(GenericReport { trace, tangents, outcome: GenericOutcome::Unclassified { reason } });
    }
    if let Some(last) = trace.samples.last_mut() {
        if last.monitors.entropy.is_none() && cfg.flow.entropy_every > 0 {
            last.monitors.entropy = entropy(&last.surface).ok().map(|e| e.lambda);
        }
    }
    let tangent = match extract_tangent(&trace, None, cfg.scales) {
        Ok(tc) => tc,
        Err(e) => {
            return Ok(GenericReport {
                trace,
                tangents,
                outcome: GenericOutcome::Unclassified { reason: e.to_string() },
            })
        }
    };
    let outcome = match tangent.classification {
        TangentClass::Sphere | TangentClass::Circle => GenericOutcome::RoundExtinction,
        TangentClass::Cylinder => GenericOutcome::NonCompactSingularity,
        TangentClass::Line | TangentClass::Other => GenericOutcome::Unclassified {
            reason: format!(
                "tangent slice matches no round model (relative distance {:.3e})",
                tangent.scales[0].distance
            ),
        },
    };
    tangents.push(tangent);
    debug_assert!(!(matches!(initial, Surface::Curve(_)) && !trace.jumps.is_empty()));
    Ok(GenericReport { trace, tangents, outcome })
}

// ---------------------------------------------------------------------------
// audits

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeAudit {
    pub probe: Probe,
    pub values: Vec<f64>,
    /// Largest increase between consecutive samples.
    pub max_increase: f64,
    /// `max − min` of the sequence.
    pub variation: f64,
    pub non_increasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub probes: Vec<ProbeAudit>,
    pub all_non_increasing: bool,
}

/// `∫_{M_t} Φ_{(x0,t0)}` along the trace for each probe, checked to be
/// non-increasing up to `tolerance` per sample step.
pub fn monotonicity_audit(trace: &FlowTrace, probes: &[Probe], tolerance: f64) -> Result<MonotonicityReport> {
    let mut out = Vec::with_capacity(probes.len());
    for &probe in probes {
        let values = crate::functionals::density_trace(trace, probe.x0, probe.t0)?;
        let max_increase = values.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
        out.push(ProbeAudit {
            probe,
            max_increase,
            variation: hi - lo,
            non_increasing: max_increase <= tolerance,
            values,
        });
    }
    let all_non_increasing = out.iter().all(|p| p.non_increasing);
    Ok(MonotonicityReport { probes: out, all_non_increasing })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub t_end: f64,
    /// Largest distance (relative to `√(−t_end)`) of the evolved nodes to `√(−t_end) Σ`.
    pub distance: f64,
    /// `max |H + ⟨x,n⟩/2t| · √(−t)` on the final slice.
    pub slice_defect: f64,
    pub pass: bool,
}

/// Flows a verified shrinker by MCF from `t = −1` to `t_end` and compares
/// with `√(−t_end) Σ`. Free ends are clamped by the scheme, so for open
/// profiles only the middle half is compared.
pub fn self_shrinking_flow_consistency(surface: &Surface, t_end: f64, tol: f64) -> Result<ConsistencyReport> {
    shrinker::residual(surface)?.require_shrinker()?;
    if !(t_end > -1.0 && t_end < 0.0) {
        return Err(Error::Domain(format!("t_end must lie in (-1, 0), got {t_end}")));
    }
    let cfg = FlowConfig { t_start: -1.0, t_max: t_end, sample_interval: 1.0, ..FlowConfig::mcf() };
    let trace = run_flow(surface, &cfg)?;
    match &trace.termination {
        Some(Termination::TimeBudget { .. }) => {}
        other => return Err(Error::Flow(format!("consistency run ended early: {other:?}"))),
    }
    let evolved = &trace.samples.last().unwrap().surface;
    let scale = (-t_end).sqrt();
    let reference = surface.dilate(scale)?;
    let g = evolved.local_geometry()?;
    let n = g.len();
    let interior: Vec<usize> =
        if evolved.ends()[0] == End::Free { (n / 4..n - n / 4).collect() } else { (0..n).collect() };
    let refnodes = reference.nodes();
    let seg = |p: [f64; 2]| {
        (0..refnodes.len() - 1 + usize::from(reference.is_closed()))
            .map(|i| {
                let (a, b) = (refnodes[i], refnodes[(i + 1) % refnodes.len()]);
                let ab = [b[0] - a[0], b[1] - a[1]];
                let l2 = ab[0] * ab[0] + ab[1] * ab[1];
                let s = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / l2).clamp(0.0, 1.0);
                (p[0] - a[0] - s * ab[0]).hypot(p[1] - a[1] - s * ab[1])
            })
            .fold(f64::INFINITY, f64::min)
    };
    let distance = interior.iter().map(|&i| seg(g.position[i])).fold(0.0, f64::max) / scale;
    let slice_defect = interior
        .iter()
        .map(|&i| (g.mean_curvature[i] + g.support(i) / (2.0 * t_end)).abs() * scale)
        .fold(0.0, f64::max);
    Ok(ConsistencyReport { t_end, distance, slice_defect, pass: distance < tol && slice_defect < tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DiscreteCurve, ProfileSurface};
    use nalgebra::{DMatrix, DVector};

    fn mean_radius(s: &Surface) -> f64 {
        let p = s.nodes();
        let c = match s {
            Surface::Curve(_) => mean_point(p),
            Surface::Profile(_) => [0.0, 0.0],
        };
        p.iter().map(|q| (q[0] - c[0]).hypot(q[1] - c[1])).sum::<f64>() / p.len() as f64
    }

    #[test]
    fn cyclic_solver_matches_dense() {
        let n = 7;
        let sub: Vec<f64> = (0..n).map(|i| -0.3 - 0.01 * i as f64).collect();
        let sup: Vec<f64> = (0..n).map(|i| -0.2 + 0.02 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + 0.1 * i as f64).collect();
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = diag[i];
            m[(i, (i + n - 1) % n)] = sub[i];
            m[(i, (i + 1) % n)] = sup[i];
        }
        let exact = m.lu().solve(&DVector::from_vec(rhs.clone())).unwrap();
        let mut x = rhs;
        cyclic_thomas(&sub, &diag, &sup, &mut x);
        for i in 0..n {
            assert!((x[i] - exact[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn circle_radius_law() {
        let r0 = 1.3;
        let s: Surface = DiscreteCurve::circle(r0, 128).unwrap().into();
        let cfg = FlowConfig { t_max: 0.4 * r0 * r0, sample_interval: 0.05, ..FlowConfig::mcf() };
        let trace = run_flow(&s, &cfg).unwrap();
        assert!(matches!(trace.termination, Some(Termination::TimeBudget { .. })));
        for smp in &trace.samples {
            let exact = (r0 * r0 - 2.0 * smp.time).sqrt();
            assert!(
                (mean_radius(&smp.surface) / exact - 1.0).abs() < 1e-3,
                "t = {} err {}",
                smp.time,
                mean_radius(&smp.surface) / exact - 1.0
            );
        }
    }

    #[test]
    fn sphere_radius_law() {
        let r0 = 1.0;
        let s: Surface = ProfileSurface::sphere(r0, 65).unwrap().into();
        let cfg = FlowConfig { t_max: 0.2, sample_interval: 0.02, ..FlowConfig::mcf() };
        let trace = run_flow(&s, &cfg).unwrap();
        for smp in &trace.samples {
            let exact = (r0 * r0 - 4.0 * smp.time).sqrt();
            assert!(
                (mean_radius(&smp.surface) / exact - 1.0).abs() < 1e-3,
                "t = {} err {}",
                smp.time,
                mean_radius(&smp.surface) / exact - 1.0
            );
        }
    }

    #[test]
    fn line_is_static() {
        let s: Surface = DiscreteCurve::line(0.4, [0.3, -0.2], 5.0, 101).unwrap().into();
        let mut cur = s.clone();
        for _ in 0..50 {
            cur = mcf_step(&cur, 1e-2).unwrap();
        }
        let drift =
            s.nodes().iter().zip(cur.nodes()).map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1])).fold(0.0, f64::max);
        assert!(drift < 1e-12, "{drift}");
    }

    #[test]
    fn first_order_in_time() {
        let r0 = 1.0;
        let s: Surface = DiscreteCurve::circle(r0, 64).unwrap().into();
        let err = |dt: f64| {
            let cfg = FlowConfig { fixed_dt: Some(dt), t_max: 0.4, sample_interval: 1.0, ..FlowConfig::mcf() };
            let tr = run_flow(&s, &cfg).unwrap();
            let last = tr.samples.last().unwrap();
            (mean_radius(&last.surface) - (r0 * r0 - 2.0 * last.time).sqrt()).abs()
        };
        let (e1, e2) = (err(4e-3), err(2e-3));
        let ratio = e1 / e2;
        assert!((1.7..=2.3).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn circle_extinction_time() {
        let r0 = 1.0;
        let s: Surface = DiscreteCurve::circle(r0, 96).unwrap().into();
        let trace = run_flow(&s, &FlowConfig::mcf()).unwrap();
        let Some(Termination::Extinction { estimated_time, .. }) = trace.termination else {
            panic!("{:?}", trace.termination)
        };
        assert!((estimated_time - 0.5).abs() < 1e-3, "{estimated_time}");
        let tc = extract_tangent(&trace, None, 4).unwrap();
        assert_eq!(tc.classification, TangentClass::Circle);
        assert!(tc.agreement && tc.bounded_diameter);
        assert!(tc.scales.iter().all(|f| f.distance < 1e-3 / std::f64::consts::SQRT_2 * 2.0));
    }

    #[test]
    fn rescaled_fixed_point_and_radius_ode() {
        let s: Surface = DiscreteCurve::circle(std::f64::consts::SQRT_2, 128).unwrap().into();
        let mut cur = s.clone();
        for _ in 0..1000 {
            cur = rescaled_step(&cur, 1e-3).unwrap();
        }
        assert!(crate::geometry::hausdorff_distance(&s, &cur) < 1e-4);
        // r' = −1/r + r/2 from r = 1.3, integrated exactly: r² = 2 + (r0² − 2) e^{s}
        let cfg = FlowConfig { kind: FlowKind::Rescaled, t_max: 1.0, ..FlowConfig::rescaled() };
        let trace = run_flow(&DiscreteCurve::circle(1.3, 128).unwrap().into(), &cfg).unwrap();
        for smp in &trace.samples {
            let exact = (2.0 + (1.69 - 2.0) * smp.time.exp()).sqrt();
            assert!((mean_radius(&smp.surface) / exact - 1.0).abs() < 1e-3, "s = {}", smp.time);
        }
    }

    #[test]
    fn avoidance_of_nested_circles() {
        let outer =
            run_flow(&DiscreteCurve::circle(1.0, 96).unwrap().into(), &FlowConfig { t_max: 0.2, ..FlowConfig::mcf() })
                .unwrap();
        let inner =
            run_flow(&DiscreteCurve::circle(0.6, 96).unwrap().into(), &FlowConfig { t_max: 0.2, ..FlowConfig::mcf() })
                .unwrap();
        assert!(matches!(inner.termination, Some(Termination::Extinction { .. })));
        for a in &inner.samples {
            let b = outer
                .samples
                .iter()
                .min_by(|x, y| (x.time - a.time).abs().total_cmp(&(y.time - a.time).abs()))
                .unwrap();
            let rin = a.surface.nodes().iter().map(|q| q[0].hypot(q[1])).fold(0.0, f64::max);
            let rout = b.surface.nodes().iter().map(|q| q[0].hypot(q[1])).fold(f64::INFINITY, f64::min);
            assert!(rin < rout);
        }
    }

    #[test]
    fn consistency_on_round_shrinkers() {
        let circle: Surface = DiscreteCurve::circle(std::f64::consts::SQRT_2, 128).unwrap().into();
        let sphere: Surface = ProfileSurface::sphere(2.0, 129).unwrap().into();
        let cyl: Surface = ProfileSurface::cylinder(std::f64::consts::SQRT_2, 10.0, 201).unwrap().into();
        for s in [circle, sphere, cyl] {
            let r = self_shrinking_flow_consistency(&s, -0.8, 1e-3).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn jsonl_and_csv_export() {
        let s: Surface = DiscreteCurve::circle(1.0, 32).unwrap().into();
        let probe = Probe { x0: [0.0, 0.0], t0: 1.0 };
        let cfg = FlowConfig { t_max: 0.05, density_probes: vec![probe], f_probes: vec![probe], ..FlowConfig::mcf() };
        let trace = run_flow(&s, &cfg).unwrap();
        let mut a = Vec::new();
        trace.write_jsonl(&mut a).unwrap();
        let text = String::from_utf8(a).unwrap();
        assert_eq!(text.lines().count(), trace.samples.len() + 1);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["record"], "sample");
        let mut b = Vec::new();
        trace.write_csv(&mut b).unwrap();
        let csv = String::from_utf8(b).unwrap();
        assert!(csv.starts_with("leg,time,step,dt,nodes,area,enclosed_area,max_a,entropy,f_0,density_0"));
        assert_eq!(csv.lines().count(), trace.samples.len() + 1);
    }
}
