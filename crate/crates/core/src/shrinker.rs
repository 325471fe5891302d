//! Self-shrinkers: the residual `H − ⟨x,n⟩/2`, ODE solvers for shrinking
//! curves and rotational profiles, and weighted integral identities.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{hausdorff_distance, LocalGeometry, Model, ProfileSurface, ProfileTopology, Surface};

/// Acceptance gate for shrinkers: max residual.
pub const SHRINKER_MAX_TOL: f64 = 1e-4;
/// Acceptance gate for shrinkers: weighted-L² residual.
pub const SHRINKER_L2_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShrinkerResidual {
    pub per_node: Vec<f64>,
    pub max: f64,
    /// `(∫ r² e^{-|x|²/4} / ∫ e^{-|x|²/4})^{1/2}`.
    pub weighted_l2: f64,
}

impl ShrinkerResidual {
    pub fn is_shrinker(&self) -> bool {
        self.max < SHRINKER_MAX_TOL && self.weighted_l2 < SHRINKER_L2_TOL
    }

    pub fn require_shrinker(&self) -> Result<()> {
        if self.is_shrinker() {
            Ok(())
        } else {
            Err(Error::NotShrinker { max: self.max, l2: self.weighted_l2 })
        }
    }
}

pub fn residual(surface: &Surface) -> Result<ShrinkerResidual> {
    Ok(residual_with(&surface.local_geometry()?))
}

pub fn residual_with(g: &LocalGeometry) -> ShrinkerResidual {
    let per_node: Vec<f64> = (0..g.len()).map(|i| g.mean_curvature[i] - 0.5 * g.support(i)).collect();
    let max = per_node.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let area = g.gaussian_integral(|_| 1.0);
    let l2 = (g.gaussian_integral(|i| per_node[i] * per_node[i]) / area).sqrt();
    ShrinkerResidual { per_node, max, weighted_l2: l2 }
}

// ---------------------------------------------------------------------------
// shrinking curves

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveOdeConfig {
    /// Arclength step; reduced locally so that `|H| h ≤ 0.05`.
    pub step: f64,
    /// Closure is tested after each of at most this many periods of `|x|`.
    pub max_periods: usize,
    pub escape_radius: f64,
    pub closure_tol: f64,
    /// Arclength budget for orbits without a detectable period.
    pub max_length: f64,
}

impl Default for CurveOdeConfig {
    fn default() -> Self {
        Self { step: 1e-3, max_periods: 20, escape_radius: 50.0, closure_tol: 1e-6, max_length: 500.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrbitClass {
    /// `E = 0`: a line through the origin.
    StraightLine,
    Circle,
    /// Closes after `q` periods of `|x|`, turning `p` times.
    Closed {
        p: u32,
        q: u32,
    },
    /// Bounded, but not closed within the period budget.
    NonClosing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveOrbit {
    pub h0: f64,
    pub start: [f64; 2],
    pub theta0: f64,
    pub class: OrbitClass,
    /// `E = H² e^{-|x|²/2}` at the start.
    pub energy: f64,
    /// `max |E(s) − E(0)| / E(0)`.
    pub energy_drift: f64,
    /// `max |H − ⟨x,n⟩/2|` along the orbit.
    pub shrinker_defect: f64,
    pub periods: usize,
    /// Tangent turning per period of `|x|`.
    pub rotation_per_period: Option<f64>,
    pub closure_defect: Option<f64>,
    pub min_radius: f64,
    pub max_radius: f64,
    /// Bound on `|x|` implied by `H² e^{-2H²} ≥ E`.
    pub radius_bound: f64,
    pub arclength: f64,
    /// Samples along the orbit, roughly every `0.05` in arclength.
    pub points: Vec<[f64; 2]>,
}

type CurveState = [f64; 4];

fn curve_rhs(y: &CurveState) -> CurveState {
    let (c, s) = (y[2].cos(), y[2].sin());
    [c, s, y[3], 0.5 * y[3] * (y[0] * c + y[1] * s)]
}

fn rk4<const N: usize>(f: &dyn Fn(&[f64; N]) -> [f64; N], y: &[f64; N], h: f64) -> [f64; N] {
    let add = |a: &[f64; N], b: &[f64; N], k: f64| -> [f64; N] { std::array::from_fn(|i| a[i] + k * b[i]) };
    let k1 = f(y);
    let k2 = f(&add(y, &k1, 0.5 * h));
    let k3 = f(&add(y, &k2, 0.5 * h));
    let k4 = f(&add(y, &k3, h));
    std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Root of `event(rk4(y, τ))` for τ in `(0, h]`, by bisection.
fn locate<const N: usize>(
    f: &dyn Fn(&[f64; N]) -> [f64; N],
    y: &[f64; N],
    h: f64,
    event: &dyn Fn(&[f64; N]) -> f64,
) -> (f64, [f64; N]) {
    let e0 = event(y);
    let (mut lo, mut hi) = (0.0, h);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if (event(&rk4(f, y, mid)) > 0.0) == (e0 > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    (tau, rk4(f, y, tau))
}

/// Largest `|x|` compatible with `E`: `|x|² = 2 ln(u/E)` where `u` is the
/// largest root of `u e^{-2u} = E`.
fn radius_bound(energy: f64) -> f64 {
    let peak = 0.5 * (-1.0f64).exp();
    if energy >= peak {
        return (2.0 * (0.5 / energy).ln().max(0.0)).sqrt();
    }
    let (mut lo, mut hi): (f64, f64) = (0.5, 1.0);
    while hi * (-2.0 * hi).exp() > energy {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * (-2.0 * mid).exp() > energy {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (2.0 * (hi / energy).ln()).sqrt()
}

/// Integrates a shrinking curve in arclength from `position` with mean
/// curvature `h0`.
///
/// The state is `(x, θ, H)` with `θ' = H` and `2H' = H⟨x, γ'⟩`; the start
/// tangent is chosen so that `⟨x0, n0⟩ = 2 h0`, which needs `|x0| ≥ 2|h0|`.
/// Orbits are classified by the tangent turning accumulated over periods of
/// `|x|`.
pub fn shrinker_curve_ode(h0: f64, position: [f64; 2], cfg: &CurveOdeConfig) -> Result<CurveOrbit> {
    if h0 == 0.0 || !h0.is_finite() {
        return Err(Error::Domain("H0 = 0 gives E = 0, the straight-line branch".into()));
    }
    let rad = position[0].hypot(position[1]);
    let ratio = 2.0 * h0 / rad;
    if !(ratio.abs() <= 1.0 + 1e-15) {
        return Err(Error::Domain(format!("need |x0| >= 2|H0|, got |x0| = {rad}, H0 = {h0}")));
    }
    let theta0 = position[1].atan2(position[0]) + ratio.clamp(-1.0, 1.0).asin();
    let mut y: CurveState = [position[0], position[1], theta0, h0];
    let f = |y: &CurveState| curve_rhs(y);
    let energy_of = |y: &CurveState| y[3] * y[3] * (-(y[0] * y[0] + y[1] * y[1]) / 2.0).exp();
    let defect_of = |y: &CurveState| (y[3] - 0.5 * (y[0] * y[2].sin() - y[1] * y[2].cos())).abs();
    let radial = |y: &CurveState| y[0] * y[2].cos() + y[1] * y[2].sin();
    let e0 = energy_of(&y);
    let bound = radius_bound(e0);

    let mut orbit = CurveOrbit {
        h0,
        start: position,
        theta0,
        class: OrbitClass::NonClosing,
        energy: e0,
        energy_drift: 0.0,
        shrinker_defect: defect_of(&y),
        periods: 0,
        rotation_per_period: None,
        closure_defect: None,
        min_radius: rad,
        max_radius: rad,
        radius_bound: bound,
        arclength: 0.0,
        points: vec![position],
    };
    let mut crossings = 0usize;
    let mut sign = 0.0f64;
    let mut last_sample = 0.0;
    let mut s = 0.0;
    let circle_length = 2.0 * PI * rad;
    loop {
        let h = cfg.step.min(0.05 / y[3].abs());
        if h < 1e-12 {
            return Err(Error::Integration(format!("step size underflow at s = {s}")));
        }
        let mut next = rk4(&f, &y, h);
        let mut ds = h;
        let e = radial(&next);
        let mut period_done = false;
        // skip the start point, where ⟨x,T⟩ may vanish exactly
        if sign != 0.0 && e != 0.0 && e.signum() != sign {
            let (tau, at) = locate(&f, &y, h, &radial);
            next = at;
            ds = tau;
            crossings += 1;
            period_done = crossings.is_multiple_of(2);
            sign = -sign;
        } else if e.abs() > 1e-12 {
            sign = e.signum();
        }
        // a circle never crosses; stop it after one revolution
        let circle_done = crossings == 0 && next[2] - theta0 >= 2.0 * PI;
        let (next, ds) = if circle_done {
            let turn = |z: &CurveState| z[2] - theta0 - 2.0 * PI;
            let (tau, at) = locate(&f, &y, h, &turn);
            (at, tau)
        } else {
            (next, ds)
        };
        y = next;
        s += ds;
        let r = y[0].hypot(y[1]);
        orbit.min_radius = orbit.min_radius.min(r);
        orbit.max_radius = orbit.max_radius.max(r);
        orbit.energy_drift = orbit.energy_drift.max((energy_of(&y) - e0).abs() / e0);
        orbit.shrinker_defect = orbit.shrinker_defect.max(defect_of(&y));
        if s - last_sample >= 0.05 {
            orbit.points.push([y[0], y[1]]);
            last_sample = s;
        }
        if r > cfg.escape_radius {
            return Err(Error::Integration(format!("orbit escaped |x| > {} at s = {s}", cfg.escape_radius)));
        }
        if circle_done {
            let variation = orbit.max_radius - orbit.min_radius;
            let defect = (y[0] - position[0]).hypot(y[1] - position[1]);
            orbit.closure_defect = Some(defect);
            orbit.rotation_per_period = Some(2.0 * PI);
            if variation < 1e-9 * rad && defect < cfg.closure_tol {
                orbit.class = OrbitClass::Circle;
            }
            break;
        }
        if period_done {
            orbit.periods += 1;
            let k = orbit.periods;
            let turn = y[2] - theta0;
            orbit.rotation_per_period = Some(turn / k as f64);
            let defect = (y[0] - position[0]).hypot(y[1] - position[1]);
            let winding = turn / (2.0 * PI);
            if defect < cfg.closure_tol && (winding - winding.round()).abs() < cfg.closure_tol {
                orbit.closure_defect = Some(defect);
                orbit.class = OrbitClass::Closed { p: winding.round().abs() as u32, q: k as u32 };
                break;
            }
            if k >= cfg.max_periods {
                break;
            }
        }
        if s > cfg.max_length || (crossings == 0 && s > 4.0 * circle_length + 100.0) {
            break;
        }
    }
    orbit.arclength = s;
    Ok(orbit)
}

/// Sweep over apex starts `x0 = (2 h0, 0)`. `h0 = 0` is classified as the
/// straight line through the origin without integration.
pub fn orbit_sweep(h0_values: &[f64], cfg: &CurveOdeConfig) -> Result<Vec<CurveOrbit>> {
    use rayon::prelude::*;
    h0_values
        .par_iter()
        .map(|&h0| {
            if h0 == 0.0 {
                Ok(CurveOrbit {
                    h0,
                    start: [0.0, 0.0],
                    theta0: PI / 2.0,
                    class: OrbitClass::StraightLine,
                    energy: 0.0,
                    energy_drift: 0.0,
                    shrinker_defect: 0.0,
                    periods: 0,
                    rotation_per_period: None,
                    closure_defect: None,
                    min_radius: 0.0,
                    max_radius: f64::INFINITY,
                    radius_bound: f64::INFINITY,
                    arclength: 0.0,
                    points: Vec::new(),
                })
            } else {
                shrinker_curve_ode(h0, [2.0 * h0, 0.0], cfg)
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// rotational profiles

/// Where the torus shooting starts: the outermost point moving up, or the
/// innermost point moving down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TorusStart {
    Outer,
    Inner,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TorusConfig {
    pub start: TorusStart,
    /// Bracket for the starting radius.
    pub window: [f64; 2],
    /// Bisection stops when the bracket is narrower than this.
    pub tolerance: f64,
    pub step: f64,
    pub nodes: usize,
}

impl TorusConfig {
    pub fn outer() -> Self {
        Self { start: TorusStart::Outer, window: [3.25, 3.45], tolerance: 1e-12, step: 1e-3, nodes: 512 }
    }

    pub fn inner() -> Self {
        Self { start: TorusStart::Inner, window: [0.40, 0.47], ..Self::outer() }
    }
}

impl Default for TorusConfig {
    fn default() -> Self {
        Self::outer()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootingResult {
    #[serde(skip)]
    pub surface: ProfileSurface,
    /// Shooting parameter at convergence (start radius, or pole height).
    pub parameter: f64,
    pub bracket: [f64; 2],
    pub closure_defect: f64,
    pub half_length: f64,
    pub min_r: f64,
    pub max_r: f64,
    pub max_z: f64,
    pub residual_max: f64,
    pub bisection_steps: usize,
}

type ProfileState = [f64; 3];

/// `r' = cos θ`, `z' = sin θ`, `θ' = (r sin θ − z cos θ)/2 − sin θ / r`,
/// with the pole limit `θ' = −z cos θ / 4` on the axis.
fn profile_rhs(y: &ProfileState) -> ProfileState {
    let (c, s) = (y[2].cos(), y[2].sin());
    let turn = if y[0] == 0.0 { -y[1] * c / 4.0 } else { 0.5 * (y[0] * s - y[1] * c) - s / y[0] };
    [c, s, turn]
}

/// Integrates until `z` crosses zero in the given direction; returns the
/// arclength and the state there.
fn shoot_to_axis_plane(start: ProfileState, direction: f64, step: f64) -> Result<(f64, ProfileState)> {
    let f = |y: &ProfileState| profile_rhs(y);
    let mut y = start;
    let mut s = 0.0;
    let z_event = |y: &ProfileState| y[1];
    while s < 100.0 {
        let next = rk4(&f, &y, step);
        if !(next[0] > 0.0) || !next.iter().all(|v| v.is_finite()) {
            return Err(Error::Integration(format!("profile reached the axis at s = {s}")));
        }
        let crossed = s > 0.0 && (next[1] - y[1]) * direction > 0.0 && y[1] * next[1] <= 0.0 && next[1] != y[1];
        if crossed && y[1] != 0.0 {
            let (tau, at) = locate(&f, &y, step, &z_event);
            return Ok((s + tau, at));
        }
        y = next;
        s += step;
    }
    Err(Error::Integration("profile did not return to z = 0".into()))
}

fn torus_defect(r0: f64, cfg: &TorusConfig) -> Result<(f64, f64, ProfileState)> {
    let (theta, dir) = match cfg.start {
        TorusStart::Outer => (PI / 2.0, -1.0),
        TorusStart::Inner => (-PI / 2.0, 1.0),
    };
    let (len, end) = shoot_to_axis_plane([r0, 0.0, theta], dir, cfg.step)?;
    Ok((end[2].cos(), len, end))
}

/// Shooting solution of the rotational shrinker equation closing to a torus.
///
/// Starting perpendicular to the symmetry plane `z = 0` at radius `r0`, the
/// profile is integrated to its next crossing of that plane; it closes
/// smoothly (by reflection) exactly when it crosses perpendicularly. `r0` is
/// found by bisection on `cos θ` at the crossing.
pub fn solve_angenent_torus(cfg: &TorusConfig) -> Result<ShootingResult> {
    let [mut lo, mut hi] = cfg.window;
    let dlo = torus_defect(lo, cfg)?.0;
    let dhi = torus_defect(hi, cfg)?.0;
    if dlo * dhi > 0.0 {
        return Err(Error::NoBracket { lo, hi });
    }
    let mut steps = 0;
    let mut dl = dlo;
    while hi - lo > cfg.tolerance && steps < 200 {
        let mid = 0.5 * (lo + hi);
        let dm = torus_defect(mid, cfg)?.0;
        if (dm > 0.0) == (dl > 0.0) {
            lo = mid;
            dl = dm;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    let r0 = 0.5 * (lo + hi);
    let (defect, half_length, _) = torus_defect(r0, cfg)?;
    let surface = build_torus_profile(r0, half_length, cfg)?;
    let g = surface.local_geometry()?;
    let res = residual_with(&g);
    let p = surface.profile();
    Ok(ShootingResult {
        parameter: r0,
        bracket: cfg.window,
        closure_defect: defect.abs(),
        half_length,
        min_r: p.iter().map(|q| q[0]).fold(f64::INFINITY, f64::min),
        max_r: p.iter().map(|q| q[0]).fold(0.0, f64::max),
        max_z: p.iter().map(|q| q[1]).fold(f64::NEG_INFINITY, f64::max),
        residual_max: res.max,
        bisection_steps: steps,
        surface,
    })
}

/// `nodes` equally spaced nodes: half the loop by RK4 with step
/// `L / (nodes / 2)`, the other half by reflection in `z = 0`.
fn build_torus_profile(r0: f64, half_length: f64, cfg: &TorusConfig) -> Result<ProfileSurface> {
    if cfg.nodes < 16 || !cfg.nodes.is_multiple_of(2) {
        return Err(Error::Domain("torus profile needs an even node count >= 16".into()));
    }
    let half = cfg.nodes / 2;
    let h = half_length / half as f64;
    let theta = match cfg.start {
        TorusStart::Outer => PI / 2.0,
        TorusStart::Inner => -PI / 2.0,
    };
    let f = |y: &ProfileState| profile_rhs(y);
    let mut y = [r0, 0.0, theta];
    let mut arc = vec![[y[0], y[1]]];
    for _ in 0..half {
        y = rk4(&f, &y, h);
        arc.push([y[0], y[1]]);
    }
    arc[half][1] = 0.0;
    let mut nodes = arc.clone();
    nodes.extend(arc[1..half].iter().rev().map(|p| [p[0], -p[1]]));
    ProfileSurface::new(nodes, ProfileTopology::TorusLike)
}

/// Shooting from the north pole `(0, z0)` for sphere-like solutions, with
/// bisection on `z0` until the profile meets `z = 0` perpendicularly. The
/// round sphere of radius 2 is the expected answer.
pub fn solve_sphere_from_pole(window: [f64; 2], nodes: usize) -> Result<ShootingResult> {
    let step = 1e-3;
    let defect = |z0: f64| -> Result<(f64, f64)> {
        let (len, end) = shoot_to_axis_plane([0.0, z0, 0.0], -1.0, step)?;
        Ok((end[2].cos(), len))
    };
    let [mut lo, mut hi] = window;
    let mut dl = defect(lo)?.0;
    if dl * defect(hi)?.0 > 0.0 {
        return Err(Error::NoBracket { lo, hi });
    }
    let mut steps = 0;
    while hi - lo > 1e-12 && steps < 200 {
        let mid = 0.5 * (lo + hi);
        let dm = defect(mid)?.0;
        if (dm > 0.0) == (dl > 0.0) {
            lo = mid;
            dl = dm;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    let z0 = 0.5 * (lo + hi);
    let (d, len) = defect(z0)?;
    if nodes < 9 || nodes.is_multiple_of(2) {
        return Err(Error::Domain("sphere profile needs an odd node count >= 9".into()));
    }
    let half = nodes / 2;
    let h = len / half as f64;
    let f = |y: &ProfileState| profile_rhs(y);
    let mut y = [0.0, z0, 0.0];
    let mut arc = vec![[0.0, z0]];
    for _ in 0..half {
        y = rk4(&f, &y, h);
        arc.push([y[0], y[1]]);
    }
    arc[half][1] = 0.0;
    let mut pts = arc.clone();
    pts.extend(arc[..half].iter().rev().map(|p| [p[0], -p[1]]));
    let surface = ProfileSurface::new(pts, ProfileTopology::SphereLike)?;
    let res = residual_with(&surface.local_geometry()?);
    let p = surface.profile();
    Ok(ShootingResult {
        parameter: z0,
        bracket: window,
        closure_defect: d.abs(),
        half_length: len,
        min_r: 0.0,
        max_r: p.iter().map(|q| q[0]).fold(0.0, f64::max),
        max_z: z0,
        residual_max: res.max,
        bisection_steps: steps,
        surface,
    })
}

/// Hausdorff distance between torus profiles shot from the outer and the
/// inner start.
pub fn torus_solver_agreement(nodes: usize) -> Result<f64> {
    let a = solve_angenent_torus(&TorusConfig { nodes, ..TorusConfig::outer() })?;
    let b = solve_angenent_torus(&TorusConfig { nodes, ..TorusConfig::inner() })?;
    Ok(hausdorff_distance(&a.surface.into(), &b.surface.into()))
}

// ---------------------------------------------------------------------------
// weighted identities

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    /// `[|x|² − 2n] / [1]`.
    pub second_moment: f64,
    /// `|[x]| / [1]`.
    pub first_moment: f64,
    /// `|[x |x|²]| / [1]`.
    pub third_moment: f64,
    /// `[|x|⁴ − 2n(2n+4) + 16H²] / [1]`.
    pub fourth_moment: f64,
    /// `max_w |[⟨x,w⟩²] − 2[|w^T|²]| / [1]` over the ambient basis.
    pub directional: f64,
    /// `|[(|x|²/4 − n/2)² − n/2] + [H²]| / [1]`.
    pub corollary: f64,
    /// `[1] = ∫ e^{-|x|²/4}`.
    pub weighted_area: f64,
}

impl IdentityReport {
    pub fn max_defect(&self) -> f64 {
        [
            self.second_moment.abs(),
            self.first_moment,
            self.third_moment,
            self.fourth_moment.abs(),
            self.directional,
            self.corollary,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn entries(&self) -> [(&'static str, f64); 6] {
        [
            ("second_moment", self.second_moment.abs()),
            ("first_moment", self.first_moment),
            ("third_moment", self.third_moment),
            ("fourth_moment", self.fourth_moment.abs()),
            ("directional", self.directional),
            ("corollary", self.corollary),
        ]
    }
}

/// Weighted integral identities satisfied by every shrinker, evaluated by
/// node quadrature and normalized by the weighted area. Brackets denote
/// `∫_Σ (·) e^{-|x|²/4} dμ`.
pub fn identity_suite(surface: &Surface) -> Result<IdentityReport> {
    let g = surface.local_geometry()?;
    residual_with(&g).require_shrinker()?;
    // truncated surfaces must carry negligible weight at their ends
    for (k, end) in g.ends.iter().enumerate() {
        if *end == crate::geometry::End::Free {
            let i = if k == 0 { 0 } else { g.len() - 1 };
            let w = g.gaussian(i);
            if w > 1e-14 {
                return Err(Error::Truncation { tail: w, tol: 1e-14 });
            }
        }
    }
    let n = g.dim() as f64;
    let area = g.gaussian_integral(|_| 1.0);
    let br = |f: &dyn Fn(usize) -> f64| g.gaussian_integral(f) / area;
    let x2 = |i: usize| g.radius_sq(i);
    let h2 = |i: usize| g.mean_curvature[i].powi(2);
    let second = br(&|i| x2(i) - 2.0 * n);
    let fourth = br(&|i| x2(i) * x2(i) - 2.0 * n * (2.0 * n + 4.0) + 16.0 * h2(i));
    let corollary = (br(&|i| (x2(i) / 4.0 - n / 2.0).powi(2) - n / 2.0) + br(&h2)).abs();
    let (first, third, directional) = match g.model {
        Model::Planar => {
            let m1 = [br(&|i| g.position[i][0]), br(&|i| g.position[i][1])];
            let m3 = [br(&|i| g.position[i][0] * x2(i)), br(&|i| g.position[i][1] * x2(i))];
            let dir = (0..2)
                .map(|k| (br(&|i| g.position[i][k].powi(2)) - 2.0 * br(&|i| g.tangent[i][k].powi(2))).abs())
                .fold(0.0, f64::max);
            (m1[0].hypot(m1[1]), m3[0].hypot(m3[1]), dir)
        }
        Model::Axisymmetric => {
            // horizontal components vanish by symmetry; the angular averages
            // of x₁² and |e₁^T|² are r²/2 and (T_r² + 1)/2
            let m1 = br(&|i| g.position[i][1]).abs();
            let m3 = br(&|i| g.position[i][1] * x2(i)).abs();
            let axial = (br(&|i| g.position[i][1].powi(2)) - 2.0 * br(&|i| g.tangent[i][1].powi(2))).abs();
            let horizontal =
                (br(&|i| 0.5 * g.position[i][0].powi(2)) - 2.0 * br(&|i| 0.5 * (g.tangent[i][0].powi(2) + 1.0))).abs();
            (m1, m3, axial.max(horizontal))
        }
    };
    Ok(IdentityReport {
        second_moment: second,
        first_moment: first,
        third_moment: third,
        fourth_moment: fourth,
        directional,
        corollary,
        weighted_area: area,
    })
}

// ---------------------------------------------------------------------------
// cones

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConeVerdict {
    /// `⟨x, n⟩ ≡ 0`: invariant under dilations.
    pub cone: bool,
    /// The cone passes smoothly through the origin, so it is a hyperplane.
    pub hyperplane: bool,
}

/// For a shrinker with `H ≡ 0`: checks dilation invariance and whether it
/// passes through the origin.
pub fn minimal_cone_check(surface: &Surface, tol: f64) -> Result<ConeVerdict> {
    let g = surface.local_geometry()?;
    let max_h = g.mean_curvature.iter().fold(0.0f64, |m, h| m.max(h.abs()));
    if max_h >= tol {
        return Err(Error::Domain(format!("minimal cone check needs H = 0, max |H| = {max_h:.3e}")));
    }
    let res = residual_with(&g);
    if res.max >= tol {
        return Err(Error::NotShrinker { max: res.max, l2: res.weighted_l2 });
    }
    let cone = (0..g.len()).all(|i| g.support(i).abs() < tol);
    let scale = surface.diameter();
    let through_origin = g.position.iter().any(|p| p[0].hypot(p[1]) < tol * scale.max(1.0))
        || g.edges.iter().any(|e| {
            let (a, b) = (g.position[e.a], g.position[e.b]);
            let cross = a[0] * b[1] - a[1] * b[0];
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            cross.abs() / len < tol && a[0] * b[0] + a[1] * b[1] <= 0.0
        });
    Ok(ConeVerdict { cone, hyperplane: cone && through_origin })
}
