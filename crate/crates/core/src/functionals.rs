//! Gaussian-weighted functionals `F_{x0,t0}`, the entropy `λ`, and related
//! monitors.
//!
//! Centres are given in model coordinates: `(x, y)` for planar curves and
//! `(ρ, z0)` for surfaces of revolution, where `ρ` is the distance of the
//! centre from the rotation axis. The angular integral for an off-axis centre
//! is done in closed form with the scaled Bessel functions `I0e`, `I1e`.

use std::f64::consts::PI;

use nalgebra::{SMatrix, SVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{LocalGeometry, Model, ProfileTopology, RoundProduct, Surface};
use crate::special::{bessel_i0e, bessel_i1e, gauss_legendre, unit_sphere_area};

/// Accepted truncation error relative to the value.
pub const TAIL_TOLERANCE: f64 = 1e-8;

/// Half-width of the continuation window in units of `√t0`; the Gaussian
/// weight there is `e^{-144}`.
const WINDOW: f64 = 24.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FEvaluation {
    pub value: f64,
    pub x0: Vec<f64>,
    pub t0: f64,
    /// Distance from `x0` beyond which nothing is integrated.
    pub truncation_radius: f64,
    pub tail_bound: f64,
    pub n_nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FGradient {
    pub x0: [f64; 2],
    pub t0: f64,
}

impl FGradient {
    pub fn norm(&self) -> f64 {
        (self.x0[0].powi(2) + self.x0[1].powi(2) + self.t0.powi(2)).sqrt()
    }
}

/// Value and derivatives of the un-normalized Gaussian at one point, per
/// unit measure.
#[derive(Clone, Copy)]
struct KernelValue {
    g: f64,
    dx: [f64; 2],
    dt: f64,
}

#[derive(Clone, Copy)]
struct Kernel {
    model: Model,
    x0: [f64; 2],
    t0: f64,
}

impl Kernel {
    fn at(&self, p: [f64; 2]) -> KernelValue {
        let t = self.t0;
        match self.model {
            Model::Planar => {
                let d = [p[0] - self.x0[0], p[1] - self.x0[1]];
                let q = (d[0] * d[0] + d[1] * d[1]) / (4.0 * t);
                let g = (-q).exp();
                KernelValue { g, dx: [g * d[0] / (2.0 * t), g * d[1] / (2.0 * t)], dt: g * q / t }
            }
            Model::Axisymmetric => {
                let sign = if self.x0[0] < 0.0 { -1.0 } else { 1.0 };
                let rho = self.x0[0].abs();
                let r = p[0];
                let dz = p[1] - self.x0[1];
                let e = (-((r - rho).powi(2) + dz * dz) / (4.0 * t)).exp();
                let c = r * rho / (2.0 * t);
                let (i0, i1) = (bessel_i0e(c), bessel_i1e(c));
                let big_e = (r * r + rho * rho + dz * dz) / (4.0 * t);
                let g = e * i0;
                KernelValue {
                    g,
                    dx: [sign * e * (r * i1 - rho * i0) / (2.0 * t), g * dz / (2.0 * t)],
                    dt: e * (big_e * i0 - c * i1) / t,
                }
            }
        }
    }
}

struct Accumulated {
    value: f64,
    grad: FGradient,
    tail: f64,
    radius: f64,
}

fn accumulate(g: &LocalGeometry, x0: [f64; 2], t0: f64) -> Result<Accumulated> {
    if !(t0 > 0.0) || !t0.is_finite() {
        return Err(Error::Domain(format!("t0 must be positive, got {t0}")));
    }
    let kernel = Kernel { model: g.model, x0, t0 };
    let mut sum = KernelValue { g: 0.0, dx: [0.0; 2], dt: 0.0 };
    let mut radius: f64 = 0.0;
    for (p, m) in g.position.iter().zip(&g.measure) {
        let k = kernel.at(*p);
        sum.g += m * k.g;
        sum.dx[0] += m * k.dx[0];
        sum.dx[1] += m * k.dx[1];
        sum.dt += m * k.dt;
        radius = radius.max((p[0] - x0[0]).hypot(p[1] - x0[1]));
    }
    let mut tail = 0.0;
    let mut cut = f64::INFINITY;
    for end in 0..2 {
        if g.ends[end] != crate::geometry::End::Free {
            continue;
        }
        let c = continuation(g, end, &kernel)?;
        sum.g += c.0.g;
        sum.dx[0] += c.0.dx[0];
        sum.dx[1] += c.0.dx[1];
        sum.dt += c.0.dt;
        tail += c.1;
        cut = cut.min(c.2);
    }
    if cut.is_finite() {
        radius = cut;
    }
    let n = g.dim() as f64;
    let norm = (4.0 * PI * t0).powf(-n / 2.0);
    let value = norm * sum.g;
    Ok(Accumulated {
        value,
        grad: FGradient { x0: [norm * sum.dx[0], norm * sum.dx[1]], t0: norm * sum.dt - n / (2.0 * t0) * value },
        tail: norm * tail,
        radius,
    })
}

/// Straight continuation of a free end along its outward tangent, integrated
/// with composite Gauss–Legendre panels. Returns the integrals, a bound on the
/// error made if the end is not straight, and the truncation radius.
fn continuation(g: &LocalGeometry, end: usize, kernel: &Kernel) -> Result<(KernelValue, f64, f64)> {
    let i = if end == 0 { 0 } else { g.len() - 1 };
    let p = g.position[i];
    let t = g.tangent[i];
    let d = if end == 0 { [-t[0], -t[1]] } else { t };
    let x0 = [kernel.x0[0].abs(), kernel.x0[1]];
    let b = (p[0] - x0[0]) * d[0] + (p[1] - x0[1]) * d[1];
    let width = WINDOW * kernel.t0.sqrt();
    let lo = (-b - width).max(0.0);
    let hi = (-b + width).max(0.0);
    let far = |s: f64| (p[0] + s * d[0] - x0[0]).hypot(p[1] + s * d[1] - x0[1]);
    let mut out = KernelValue { g: 0.0, dx: [0.0; 2], dt: 0.0 };
    if hi <= lo {
        return Ok((out, 0.0, far(0.0)));
    }
    if g.model == Model::Axisymmetric && d[0] < 0.0 && p[0] + hi * d[0] <= 0.0 {
        return Err(Error::Unsupported("open profile end continues into the rotation axis".into()));
    }
    let (gx, gw) = gauss_legendre(12);
    let panel = kernel.t0.sqrt();
    let panels = ((hi - lo) / panel).ceil() as usize;
    let h = (hi - lo) / panels as f64;
    for k in 0..panels {
        let a = lo + k as f64 * h;
        for (x, w) in gx.iter().zip(&gw) {
            let s = a + 0.5 * h * (x + 1.0);
            let q = [p[0] + s * d[0], p[1] + s * d[1]];
            let density = match g.model {
                Model::Planar => 1.0,
                Model::Axisymmetric => 2.0 * PI * q[0],
            };
            let kv = kernel.at(q);
            let m = 0.5 * h * w * density;
            out.g += m * kv.g;
            out.dx[0] += m * kv.dx[0];
            out.dx[1] += m * kv.dx[1];
            out.dt += m * kv.dt;
        }
    }
    // the reflected stencil reads zero curvature at the end node itself
    let inner: Vec<usize> = if end == 0 { vec![1, 2, 3] } else { (1..4).map(|k| g.len() - 1 - k).collect() };
    let kappa = inner.iter().map(|&j| g.principal[j][0].abs()).fold(0.0, f64::max);
    let bend = kappa * (hi - lo);
    Ok((out, out.g * bend.min(1.0), far(hi)))
}

/// `F_{x0,t0}(Σ) = (4πt0)^{-n/2} ∫ e^{-|x-x0|²/4t0} dμ`.
///
/// Free ends of open curves and cylinder-like profiles are continued along
/// their end tangents in closed form; an evaluation whose continuation bound
/// exceeds [`TAIL_TOLERANCE`] of the value is rejected.
pub fn f_functional(surface: &Surface, x0: [f64; 2], t0: f64) -> Result<FEvaluation> {
    let g = surface.local_geometry()?;
    f_functional_with(&g, x0, t0)
}

pub fn f_functional_with(g: &LocalGeometry, x0: [f64; 2], t0: f64) -> Result<FEvaluation> {
    let acc = accumulate(g, x0, t0)?;
    if acc.tail > TAIL_TOLERANCE * acc.value {
        return Err(Error::Truncation { tail: acc.tail, tol: TAIL_TOLERANCE * acc.value });
    }
    Ok(FEvaluation {
        value: acc.value,
        x0: x0.to_vec(),
        t0,
        truncation_radius: acc.radius,
        tail_bound: acc.tail,
        n_nodes: g.len(),
    })
}

/// `(∂F/∂x0, ∂F/∂t0)`.
pub fn f_gradient(surface: &Surface, x0: [f64; 2], t0: f64) -> Result<FGradient> {
    let g = surface.local_geometry()?;
    f_gradient_with(&g, x0, t0)
}

pub fn f_gradient_with(g: &LocalGeometry, x0: [f64; 2], t0: f64) -> Result<FGradient> {
    Ok(accumulate(g, x0, t0)?.grad)
}

/// Closed-form `F_{x0,t0}` on `S^k(R) × R^{n-k}`.
///
/// `x0` has `n + 1` coordinates; the first `k + 1` span the factor containing
/// the sphere (for `k = 0`, the first coordinate is the normal direction).
/// The flat factors integrate to one and drop out.
pub fn product_reduce_f(p: &RoundProduct, x0: &[f64], t0: f64) -> Result<FEvaluation> {
    if !(t0 > 0.0) || !t0.is_finite() {
        return Err(Error::Domain(format!("t0 must be positive, got {t0}")));
    }
    if x0.len() != p.ambient_dim {
        return Err(Error::Domain(format!("centre needs {} coordinates, got {}", p.ambient_dim, x0.len())));
    }
    let k = p.sphere_dim;
    let a = x0[..k + 1].iter().map(|v| v * v).sum::<f64>().sqrt();
    let value = if k == 0 {
        (-a * a / (4.0 * t0)).exp()
    } else {
        let r = p.radius;
        let c = r * a / (2.0 * t0);
        // ∫_0^π e^{c(cos θ - 1)} sin^{k-1} θ dθ
        let angular = match k {
            1 => PI * bessel_i0e(c),
            2 => {
                if c < 1e-8 {
                    2.0 - 2.0 * c
                } else {
                    -(-2.0 * c).exp_m1() / c
                }
            }
            _ => {
                let (xs, ws) = gauss_legendre(200);
                xs.iter()
                    .zip(&ws)
                    .map(|(x, w)| {
                        let th = 0.5 * PI * (x + 1.0);
                        0.5 * PI * w * (c * (th.cos() - 1.0)).exp() * th.sin().powi(k as i32 - 1)
                    })
                    .sum()
            }
        };
        (4.0 * PI * t0).powf(-(k as f64) / 2.0)
            * (-(r - a).powi(2) / (4.0 * t0)).exp()
            * r.powi(k as i32)
            * unit_sphere_area(k as u32 - 1)
            * angular
    };
    Ok(FEvaluation { value, x0: x0.to_vec(), t0, truncation_radius: f64::INFINITY, tail_bound: 0.0, n_nodes: 0 })
}

// ---------------------------------------------------------------------------
// entropy

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyConfig {
    /// Start points per spatial axis (the grid has `spatial²` points).
    pub spatial: usize,
    pub temporal: usize,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Search window for `t0` in units of `diam²`.
    pub t0_window: [f64; 2],
}

impl Default for EntropyConfig {
    fn default() -> Self {
        Self { spatial: 3, temporal: 5, max_iterations: 500, gradient_tolerance: 1e-8, t0_window: [1e-3, 10.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Iterate {
    pub x0: Vec<f64>,
    pub t0: f64,
    pub value: f64,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Argmax {
    pub x0: Vec<f64>,
    pub t0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyResult {
    pub lambda: f64,
    pub argmax: Argmax,
    /// Iterates of the winning start.
    pub optimizer_trace: Vec<Iterate>,
    pub multistart_count: usize,
    /// False when the winning start hit the iteration cap with the gradient
    /// still above tolerance.
    pub converged: bool,
}

struct Ascent<const N: usize> {
    theta: SVector<f64, N>,
    value: f64,
    trace: Vec<(SVector<f64, N>, f64, f64)>,
    converged: bool,
}

/// Damped Newton ascent with a steepest-ascent fallback and Armijo
/// backtracking. `f` returns the value and gradient at `θ`.
fn ascend<const N: usize>(
    f: &dyn Fn(&SVector<f64, N>) -> Option<(f64, SVector<f64, N>)>,
    start: SVector<f64, N>,
    cfg: &EntropyConfig,
) -> Option<Ascent<N>> {
    let mut theta = start;
    let (mut value, mut grad) = f(&theta)?;
    let mut trace = vec![(theta, value, grad.norm())];
    let mut converged = false;
    for _ in 0..cfg.max_iterations {
        if grad.norm() < cfg.gradient_tolerance {
            converged = true;
            break;
        }
        let mut hess = SMatrix::<f64, N, N>::zeros();
        let step = 1e-5;
        let mut hess_ok = true;
        for j in 0..N {
            let mut e = SVector::<f64, N>::zeros();
            e[j] = step;
            match (f(&(theta + e)), f(&(theta - e))) {
                (Some((_, gp)), Some((_, gm))) => hess.set_column(j, &((gp - gm) / (2.0 * step))),
                _ => hess_ok = false,
            }
        }
        let hess = 0.5 * (hess + hess.transpose());
        let newton = if hess_ok { (-hess).cholesky().map(|c| c.solve(&grad)) } else { None };
        let mut accepted = false;
        for dir in newton.into_iter().chain(std::iter::once(grad)) {
            let slope = grad.dot(&dir);
            if !(slope > 0.0) {
                continue;
            }
            let mut alpha = 1.0;
            for _ in 0..40 {
                let cand = theta + alpha * dir;
                if let Some((v, gr)) = f(&cand) {
                    if v >= value + 1e-4 * alpha * slope {
                        theta = cand;
                        value = v;
                        grad = gr;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if accepted {
                break;
            }
        }
        trace.push((theta, value, grad.norm()));
        if !accepted {
            // no ascent left at working precision
            converged = grad.norm() < 1e3 * cfg.gradient_tolerance;
            break;
        }
    }
    if grad.norm() < cfg.gradient_tolerance {
        converged = true;
    }
    Some(Ascent { theta, value, trace, converged })
}

fn linspace_fractions(k: usize, include_zero: bool) -> Vec<f64> {
    (0..k).map(|i| if include_zero { i as f64 / k as f64 } else { (i as f64 + 0.5) / k as f64 }).collect()
}

fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![(lo * hi).sqrt()];
    }
    (0..k).map(|i| lo * (hi / lo).powf(i as f64 / (k - 1) as f64)).collect()
}

/// Deterministic choice among multistart results: largest value, ties (to
/// 1e-12 relative) broken by larger `t0`, then lexicographically smallest
/// centre.
fn better(a: &(f64, Vec<f64>, f64), b: &(f64, Vec<f64>, f64)) -> bool {
    let tol = 1e-12 * a.0.abs().max(b.0.abs());
    if (a.0 - b.0).abs() > tol {
        return a.0 > b.0;
    }
    if a.2 != b.2 {
        return a.2 > b.2;
    }
    a.1.iter().zip(&b.1).find(|(x, y)| x != y).is_some_and(|(x, y)| x < y)
}

fn run_multistart<const N: usize>(
    f: &(dyn Fn(&SVector<f64, N>) -> Option<(f64, SVector<f64, N>)> + Sync),
    starts: Vec<SVector<f64, N>>,
    cfg: &EntropyConfig,
    to_point: &(dyn Fn(&SVector<f64, N>) -> (Vec<f64>, f64) + Sync),
) -> Result<EntropyResult> {
    let count = starts.len();
    let runs: Vec<Option<Ascent<N>>> = starts.into_par_iter().map(|s| ascend(f, s, cfg)).collect();
    let mut best: Option<(usize, (f64, Vec<f64>, f64))> = None;
    for (i, run) in runs.iter().enumerate() {
        if let Some(r) = run {
            let (x, t) = to_point(&r.theta);
            let key = (r.value, x, t);
            if best.as_ref().is_none_or(|(_, b)| better(&key, b)) {
                best = Some((i, key));
            }
        }
    }
    let (i, (lambda, x0, t0)) = best.ok_or_else(|| Error::Domain("entropy: no start could be evaluated".into()))?;
    let run = runs[i].as_ref().unwrap();
    let optimizer_trace = run
        .trace
        .iter()
        .map(|(th, v, gn)| {
            let (x, t) = to_point(th);
            Iterate { x0: x, t0: t, value: *v, gradient_norm: *gn }
        })
        .collect();
    Ok(EntropyResult {
        lambda,
        argmax: Argmax { x0, t0 },
        optimizer_trace,
        multistart_count: count,
        converged: run.converged,
    })
}

/// Radius of a straight cylinder-like profile, if it is one.
fn straight_cylinder_radius(surface: &Surface) -> Option<f64> {
    match surface {
        Surface::Profile(p) if p.topology() == ProfileTopology::CylinderLike => {
            let r0 = p.profile()[0][0];
            p.profile().iter().all(|q| (q[0] - r0).abs() <= 1e-12 * r0).then_some(r0)
        }
        _ => None,
    }
}

fn is_straight_line(surface: &Surface) -> bool {
    match surface {
        Surface::Curve(c) if !c.is_closed() => {
            let p = c.points();
            let (a, b) = (p[0], p[p.len() - 1]);
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            p.iter().all(|q| ((q[0] - a[0]) * (b[1] - a[1]) - (q[1] - a[1]) * (b[0] - a[0])).abs() <= 1e-12 * len * len)
        }
        _ => false,
    }
}

/// `λ(Σ) = sup F_{x0,t0}(Σ)`, by multistart ascent in `(x0, log t0)`.
///
/// Closed curves and closed profiles are optimized directly. Straight
/// cylinder-like profiles and straight lines are reduced to the round
/// product they represent.
pub fn entropy(surface: &Surface) -> Result<EntropyResult> {
    entropy_with(surface, &EntropyConfig::default())
}

pub fn entropy_with(surface: &Surface, cfg: &EntropyConfig) -> Result<EntropyResult> {
    if let Some(r) = straight_cylinder_radius(surface) {
        return entropy_round_with(&RoundProduct::new(2, 1, r)?, cfg);
    }
    if is_straight_line(surface) {
        return entropy_round_with(&RoundProduct::hyperplane(1)?, cfg);
    }
    if !surface.is_closed() {
        return Err(Error::Unsupported(
            "entropy of open surfaces is only available for straight lines and cylinders".into(),
        ));
    }
    let g = surface.local_geometry()?;
    let diam = surface.diameter();
    let [lo, hi] = surface.bounding_box();
    let profile = g.model == Model::Axisymmetric;
    let (xs, ys): (Vec<f64>, Vec<f64>) = if profile {
        let fr = linspace_fractions(cfg.spatial, true);
        let fz = linspace_fractions(cfg.spatial, false);
        (fr.iter().map(|f| f * hi[0]).collect(), fz.iter().map(|f| lo[1] + f * (hi[1] - lo[1])).collect())
    } else {
        let fr = linspace_fractions(cfg.spatial, false);
        (
            fr.iter().map(|f| lo[0] + f * (hi[0] - lo[0])).collect(),
            fr.iter().map(|f| lo[1] + f * (hi[1] - lo[1])).collect(),
        )
    };
    let ts = log_grid(cfg.t0_window[0] * diam * diam, cfg.t0_window[1] * diam * diam, cfg.temporal);
    let mut starts = Vec::new();
    for &x in &xs {
        for &y in &ys {
            for &t in &ts {
                starts.push(SVector::<f64, 3>::new(x, y, t.ln()));
            }
        }
    }
    let f = |th: &SVector<f64, 3>| -> Option<(f64, SVector<f64, 3>)> {
        let t0 = th[2].exp();
        let acc = accumulate(&g, [th[0], th[1]], t0).ok()?;
        Some((acc.value, SVector::<f64, 3>::new(acc.grad.x0[0], acc.grad.x0[1], t0 * acc.grad.t0)))
    };
    let to_point = |th: &SVector<f64, 3>| {
        let x = if profile { th[0].abs() } else { th[0] };
        (vec![x, th[1]], th[2].exp())
    };
    run_multistart(&f, starts, cfg, &to_point)
}

/// Entropy of `S^k(R) × R^{n-k}`: ascent over the distance `a` of the centre
/// from the sphere's axis point and `log t0`, with finite-difference
/// gradients of the closed form.
pub fn entropy_round(p: &RoundProduct) -> Result<EntropyResult> {
    entropy_round_with(p, &EntropyConfig::default())
}

pub fn entropy_round_with(p: &RoundProduct, cfg: &EntropyConfig) -> Result<EntropyResult> {
    let dim = p.ambient_dim;
    let value = |a: f64, t: f64| -> Option<f64> {
        let mut x = vec![0.0; dim];
        x[0] = a;
        product_reduce_f(p, &x, t).ok().map(|e| e.value)
    };
    let f = |th: &SVector<f64, 2>| -> Option<(f64, SVector<f64, 2>)> {
        let (a, t) = (th[0], th[1].exp());
        let v = value(a, t)?;
        let h = 1e-6;
        let da = (value(a + h, t)? - value(a - h, t)?) / (2.0 * h);
        let dl = (value(a, (th[1] + h).exp())? - value(a, (th[1] - h).exp())?) / (2.0 * h);
        Some((v, SVector::<f64, 2>::new(da, dl)))
    };
    let scale = if p.sphere_dim == 0 { 1.0 } else { p.radius };
    let mut starts = Vec::new();
    for frac in linspace_fractions(cfg.spatial, true) {
        for t in log_grid(cfg.t0_window[0] * scale * scale, cfg.t0_window[1] * scale * scale, cfg.temporal) {
            starts.push(SVector::<f64, 2>::new(frac * 2.0 * scale, t.ln()));
        }
    }
    let to_point = |th: &SVector<f64, 2>| {
        let mut x = vec![0.0; dim];
        x[0] = th[0].abs();
        (x, th[1].exp())
    };
    run_multistart(&f, starts, cfg, &to_point)
}

// ---------------------------------------------------------------------------
// monitors

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeGrowthReport {
    pub passed: bool,
    pub bound: f64,
    /// Centre, radius and `Vol(B_r ∩ Σ) / r^n` of the worst sample.
    pub worst_center: [f64; 2],
    pub worst_radius: f64,
    pub worst_ratio: f64,
    pub samples: usize,
}

/// Checks `Vol(B_r(x0) ∩ Σ) ≤ V r^n` on a deterministic sample of centres
/// (nodes of Σ, on the axis for profiles) and radii.
pub fn volume_growth_check(surface: &Surface, v: f64) -> Result<VolumeGrowthReport> {
    let g = surface.local_geometry()?;
    let n = g.len();
    let stride = n.div_ceil(32);
    let mut centers: Vec<[f64; 2]> = vec![[0.0, 0.0]];
    for i in (0..n).step_by(stride) {
        let p = g.position[i];
        centers.push(match g.model {
            Model::Planar => p,
            Model::Axisymmetric => [0.0, p[1]],
        });
    }
    let max_edge = g.edges.iter().map(|e| e.length).fold(0.0, f64::max);
    let diam = surface.diameter();
    let radii = log_grid(4.0 * max_edge, 2.0 * diam.max(4.0 * max_edge), 24);
    let dim = g.dim() as i32;
    let mut worst = ([0.0; 2], 0.0, 0.0);
    let mut samples = 0;
    for c in &centers {
        for &r in &radii {
            let vol: f64 = g
                .position
                .iter()
                .zip(&g.measure)
                .filter(|(p, _)| (p[0] - c[0]).hypot(p[1] - c[1]) < r)
                .map(|(_, m)| m)
                .sum();
            let ratio = vol / r.powi(dim);
            samples += 1;
            if ratio > worst.2 {
                worst = (*c, r, ratio);
            }
        }
    }
    Ok(VolumeGrowthReport {
        passed: worst.2 <= v,
        bound: v,
        worst_center: worst.0,
        worst_radius: worst.1,
        worst_ratio: worst.2,
        samples,
    })
}

/// `g(s) = F_{s y, 1 + a s²}(Σ)` on the given grid, for a verified shrinker.
pub fn radial_path_monotonicity(surface: &Surface, y: [f64; 2], a: f64, s_grid: &[f64]) -> Result<Vec<f64>> {
    crate::shrinker::residual(surface)?.require_shrinker()?;
    let g = surface.local_geometry()?;
    s_grid
        .iter()
        .map(|&s| {
            let t = 1.0 + a * s * s;
            if !(t > 0.0) {
                return Err(Error::Domain(format!("1 + a s² must stay positive (s = {s})")));
            }
            Ok(f_functional_with(&g, [s * y[0], s * y[1]], t)?.value)
        })
        .collect()
}

/// `∫_{M_t} Φ_{(x0,t0)} = F_{x0, t0 - t}(M_t)` along a flow trace.
pub fn density_trace(trace: &crate::flow::FlowTrace, x0: [f64; 2], t0: f64) -> Result<Vec<f64>> {
    let samples = &trace.samples;
    if let Some(last) = samples.last() {
        if !(last.time < t0) {
            return Err(Error::Domain(format!("t0 = {t0} lies inside the trace time range")));
        }
    }
    if samples.windows(2).any(|w| !(w[1].time > w[0].time)) {
        return Err(Error::Domain("trace times must be strictly increasing".into()));
    }
    samples.iter().map(|s| Ok(f_functional(&s.surface, x0, t0 - s.time)?.value)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DiscreteCurve, ProfileSurface};
    use std::f64::consts::E;

    fn circle(n: usize) -> Surface {
        DiscreteCurve::circle(2f64.sqrt(), n).unwrap().into()
    }

    #[test]
    fn reference_values() {
        let c = f_functional(&circle(256), [0.0, 0.0], 1.0).unwrap();
        assert!((c.value - (2.0 * PI / E).sqrt()).abs() < 1e-7);
        assert_eq!(c.tail_bound, 0.0);
        let s: Surface = ProfileSurface::sphere(2.0, 129).unwrap().into();
        assert!((f_functional(&s, [0.0, 0.0], 1.0).unwrap().value - 4.0 / E).abs() < 1e-7);
        let l: Surface = DiscreteCurve::line(0.3, [0.0, 0.0], 12.0, 241).unwrap().into();
        let on = [0.5 * 0.3f64.cos(), 0.5 * 0.3f64.sin()];
        assert!((f_functional(&l, on, 0.7).unwrap().value - 1.0).abs() < 1e-8);
        // off the line by d the value is e^{-d²/4t0}
        let d = 0.25;
        let off = [on[0] - d * 0.3f64.sin(), on[1] + d * 0.3f64.cos()];
        let v = f_functional(&l, off, 0.7).unwrap().value;
        assert!((v - (-d * d / 2.8f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn truncated_cylinder_matches_product() {
        let cyl: Surface = ProfileSurface::cylinder(2f64.sqrt(), 3.0, 241).unwrap().into();
        let p = RoundProduct::new(2, 1, 2f64.sqrt()).unwrap();
        for &(rho, z, t) in &[(0.0, 0.0, 1.0), (0.3, 0.5, 0.8), (0.0, 2.5, 2.0)] {
            let a = f_functional(&cyl, [rho, z], t).unwrap().value;
            let b = product_reduce_f(&p, &[rho, 0.0, z], t).unwrap().value;
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn off_axis_centre_matches_angular_quadrature() {
        // independent route: place the centre at (ρ, 0, z0) and integrate the
        // angle by the trapezoid rule
        let s = ProfileSurface::sphere(1.5, 65).unwrap();
        let g = s.local_geometry().unwrap();
        let (rho, z0, t0) = (0.7, 0.2, 0.6);
        let m = 512;
        let mut sum = 0.0;
        for (p, mu) in g.position.iter().zip(&g.measure) {
            let avg: f64 = (0..m)
                .map(|j| {
                    let phi = 2.0 * PI * j as f64 / m as f64;
                    let d2 = (p[0] * phi.cos() - rho).powi(2) + (p[0] * phi.sin()).powi(2) + (p[1] - z0).powi(2);
                    (-d2 / (4.0 * t0)).exp()
                })
                .sum::<f64>()
                / m as f64;
            sum += mu * avg;
        }
        let oracle = sum / (4.0 * PI * t0);
        let v = f_functional_with(&g, [rho, z0], t0).unwrap().value;
        assert!((v - oracle).abs() < 1e-13, "{v} vs {oracle}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let surfaces: Vec<Surface> = vec![
            DiscreteCurve::ellipse(1.0, 2.0, 200).unwrap().into(),
            ProfileSurface::ellipsoid(1.0, 1.6, 101).unwrap().into(),
        ];
        for s in &surfaces {
            for &(x0, t0) in &[([0.3, -0.4], 0.8), ([0.0, 0.5], 1.7)] {
                let gr = f_gradient(s, x0, t0).unwrap();
                let h = 1e-5;
                let f = |x: [f64; 2], t: f64| f_functional(s, x, t).unwrap().value;
                let fd = [
                    (f([x0[0] + h, x0[1]], t0) - f([x0[0] - h, x0[1]], t0)) / (2.0 * h),
                    (f([x0[0], x0[1] + h], t0) - f([x0[0], x0[1] - h], t0)) / (2.0 * h),
                    (f(x0, t0 + h) - f(x0, t0 - h)) / (2.0 * h),
                ];
                let an = [gr.x0[0], gr.x0[1], gr.t0];
                for k in 0..3 {
                    assert!((an[k] - fd[k]).abs() < 1e-4 * an[k].abs().max(1e-3), "{k}: {} vs {}", an[k], fd[k]);
                }
            }
        }
    }

    #[test]
    fn circle_is_critical_and_decreasing_in_large_t0() {
        let c = circle(256);
        assert!(f_gradient(&c, [0.0, 0.0], 1.0).unwrap().norm() < 1e-6);
        assert!(f_gradient(&c, [0.0, 0.0], 2.0).unwrap().t0 < 0.0);
    }

    #[test]
    fn circle_entropy_and_invariance() {
        let c = circle(256);
        let e = entropy(&c).unwrap();
        assert!((e.lambda - (2.0 * PI / E).sqrt()).abs() < 1e-7);
        assert!(e.argmax.x0.iter().all(|v| v.abs() < 1e-5) && (e.argmax.t0 - 1.0).abs() < 1e-5);
        assert_eq!(e.multistart_count, 45);
        let moved = c.dilate(2.0).unwrap().translate([5.0, 3.0]).unwrap();
        let e2 = entropy(&moved).unwrap();
        assert!((e2.lambda - e.lambda).abs() < 1e-9);
        assert!((e2.argmax.t0 - 4.0).abs() < 1e-4);
    }

    #[test]
    fn round_product_entropy() {
        let cyl = entropy_round(&RoundProduct::shrinker(2, 1).unwrap()).unwrap();
        assert!((cyl.lambda - (2.0 * PI / E).sqrt()).abs() < 1e-10);
        let sph = entropy_round(&RoundProduct::shrinker(2, 2).unwrap()).unwrap();
        assert!((sph.lambda - 4.0 / E).abs() < 1e-10);
        let plane = entropy_round(&RoundProduct::hyperplane(2).unwrap()).unwrap();
        assert!((plane.lambda - 1.0).abs() < 1e-12);
    }

    #[test]
    fn volume_growth() {
        let c = circle(256);
        assert!(volume_growth_check(&c, 10.0).unwrap().passed);
        let bad = volume_growth_check(&c, 0.1).unwrap();
        assert!(!bad.passed && bad.worst_ratio > 0.1);
        let l: Surface = DiscreteCurve::line(0.0, [0.0, 0.0], 10.0, 401).unwrap().into();
        assert!(volume_growth_check(&l, 3.0).unwrap().passed);
    }

    #[test]
    fn open_surfaces_without_closed_form_are_rejected() {
        let pts: Vec<[f64; 2]> = (0..40).map(|i| [i as f64 * 0.1, (i as f64 * 0.1).powi(2)]).collect();
        let arc: Surface = DiscreteCurve::open(pts, 1.0).unwrap().into();
        assert!(matches!(entropy(&arc), Err(Error::Unsupported(_))));
        assert!(matches!(f_functional(&arc, [0.0, 0.0], 1.0), Err(Error::Truncation { .. })));
    }
}
