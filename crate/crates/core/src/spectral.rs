//! The stability operator `L = Δ + |A|² + ½ − ½⟨x, ∇·⟩` and the second
//! variation of `F`.
//!
//! `L` is discretized in divergence form against the Gaussian weight,
//! `𝓛u = e^{|x|²/4} div(e^{-|x|²/4} ∇u)`, so `w_i L_ij = w_j L_ji` holds
//! exactly for the node weights `w_i = e^{-|x_i|²/4} |cell_i|`. On surfaces
//! of revolution, fields `u(s) cos(mφ)` are handled through the angular
//! mode `m`, which adds `−m²/r²` to the potential.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{LocalGeometry, Model, RoundProduct, Surface};
use crate::shrinker::{residual_with, ShrinkerResidual};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundary {
    /// Closed surfaces, and natural conditions at truncated ends.
    Natural,
    /// Fields vanish at nodes with `|x − x0| ≥ radius`.
    Dirichlet { radius: f64 },
}

/// Discrete `L_{x0,t0} = Δ + |A|² + 1/(2t0) − ⟨x − x0, ∇·⟩/(2t0)` acting on
/// nodal fields in one angular mode.
#[derive(Debug, Clone)]
pub struct WeightedOperator {
    pub model: Model,
    pub mode: u32,
    pub boundary: Boundary,
    pub center: [f64; 2],
    pub scale: f64,
    /// Node weights `e^{-|x-x0|²/4t0} cell_i`.
    pub weights: Vec<f64>,
    /// Zeroth-order part `|A|² + 1/(2t0) − m²/r²`.
    pub potential: Vec<f64>,
    /// `(a, b, c)`: the weighted flux `c (u_b − u_a)` through each edge.
    pub couplings: Vec<(usize, usize, f64)>,
    /// Nodes carrying unknowns; the rest are held at zero.
    pub active: Vec<usize>,
}

impl WeightedOperator {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `Lu` at every node. Values at inactive nodes are not meaningful.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = u.iter().zip(&self.potential).map(|(u, p)| u * p).collect();
        let mut flux = vec![0.0; u.len()];
        for &(a, b, c) in &self.couplings {
            let q = c * (u[b] - u[a]);
            flux[a] += q;
            flux[b] -= q;
        }
        for i in 0..u.len() {
            out[i] += flux[i] / self.weights[i];
        }
        out
    }

    /// Weighted inner product over the active nodes.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.active.iter().map(|&i| self.weights[i] * u[i] * v[i]).sum()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }

    /// Dense `L` restricted to the active nodes.
    pub fn matrix(&self) -> DMatrix<f64> {
        let k = self.active.len();
        let mut index = vec![usize::MAX; self.len()];
        for (j, &i) in self.active.iter().enumerate() {
            index[i] = j;
        }
        let mut m = DMatrix::zeros(k, k);
        for (j, &i) in self.active.iter().enumerate() {
            m[(j, j)] = self.potential[i];
        }
        for &(a, b, c) in &self.couplings {
            let (ia, ib) = (index[a], index[b]);
            if ia != usize::MAX {
                m[(ia, ia)] -= c / self.weights[a];
                if ib != usize::MAX {
                    m[(ia, ib)] += c / self.weights[a];
                }
            }
            if ib != usize::MAX {
                m[(ib, ib)] -= c / self.weights[b];
                if ia != usize::MAX {
                    m[(ib, ia)] += c / self.weights[b];
                }
            }
        }
        m
    }

    /// `max |w_i L_ij − w_j L_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        let m = self.matrix();
        let w: Vec<f64> = self.active.iter().map(|&i| self.weights[i]).collect();
        let mut worst = 0.0f64;
        for i in 0..m.nrows() {
            for j in 0..i {
                worst = worst.max((w[i] * m[(i, j)] - w[j] * m[(j, i)]).abs());
            }
        }
        worst
    }
}

/// `L` about `(0, 1)` in the axisymmetric mode, natural boundary.
pub fn assemble_l(surface: &Surface) -> Result<WeightedOperator> {
    assemble_l_with(&surface.local_geometry()?, 0, Boundary::Natural)
}

pub fn assemble_l_with(g: &LocalGeometry, mode: u32, boundary: Boundary) -> Result<WeightedOperator> {
    assemble_centered(g, [0.0, 0.0], 1.0, mode, boundary)
}

/// `L_{x0,t0}`. On surfaces of revolution the centre must lie on the axis.
pub fn assemble_centered(
    g: &LocalGeometry,
    x0: [f64; 2],
    t0: f64,
    mode: u32,
    boundary: Boundary,
) -> Result<WeightedOperator> {
    if !(t0 > 0.0) {
        return Err(Error::Domain(format!("t0 must be positive, got {t0}")));
    }
    if g.model == Model::Planar && mode != 0 {
        return Err(Error::Domain("angular modes exist only on surfaces of revolution".into()));
    }
    if g.model == Model::Axisymmetric && x0[0] != 0.0 {
        return Err(Error::Unsupported("operator centre off the rotation axis".into()));
    }
    let dist2 = |p: [f64; 2]| (p[0] - x0[0]).powi(2) + (p[1] - x0[1]).powi(2);
    let weights: Vec<f64> = (0..g.len()).map(|i| (-dist2(g.position[i]) / (4.0 * t0)).exp() * g.cell[i]).collect();
    let m2 = (mode * mode) as f64;
    let potential: Vec<f64> = (0..g.len())
        .map(|i| {
            let r = g.position[i][0];
            let angular = if mode > 0 && r > 0.0 { m2 / (r * r) } else { 0.0 };
            g.a_squared[i] + 0.5 / t0 - angular
        })
        .collect();
    let couplings =
        g.edges.iter().map(|e| (e.a, e.b, e.flux_area / e.length * (-dist2(e.midpoint) / (4.0 * t0)).exp())).collect();
    let active: Vec<usize> = (0..g.len())
        .filter(|&i| !(mode > 0 && g.is_pole(i)))
        .filter(|&i| match boundary {
            Boundary::Natural => true,
            Boundary::Dirichlet { radius } => dist2(g.position[i]) < radius * radius,
        })
        .collect();
    if weights.iter().any(|w| !(*w > 0.0)) {
        let i = weights.iter().position(|w| !(*w > 0.0)).unwrap_or(0);
        return Err(Error::Domain(format!("non-positive weight at node {i}; truncate the surface")));
    }
    Ok(WeightedOperator {
        model: g.model,
        mode,
        boundary,
        center: x0,
        scale: t0,
        weights,
        potential,
        couplings,
        active,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub mode: u32,
    /// `μ1 ≤ μ2 ≤ …` with `Lu = −μu`.
    pub eigenvalues: Vec<f64>,
    /// Weighted-orthonormal node fields, zero at inactive nodes.
    pub eigenfunctions: Vec<Vec<f64>>,
}

/// Lowest `count` eigenpairs of `L`. Each eigenfunction is normalized in the
/// weighted norm and signed so that its weighted integral is non-negative
/// (first active node positive on ties).
pub fn eigen(op: &WeightedOperator, count: usize) -> Result<SpectrumReport> {
    let k = op.active.len();
    if count > k {
        return Err(Error::Domain(format!("requested {count} eigenpairs of a {k}-dimensional operator")));
    }
    let w: Vec<f64> = op.active.iter().map(|&i| op.weights[i]).collect();
    let l = op.matrix();
    // S = W^{1/2} L W^{-1/2} is symmetric; average away rounding
    let mut s = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            s[(i, j)] = l[(i, j)] * (w[i] / w[j]).sqrt();
        }
    }
    let s = (&s + s.transpose()) * 0.5;
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("operator has non-finite entries".into()));
    }
    let eig = SymmetricEigen::try_new(s, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut eigenvalues = Vec::with_capacity(count);
    let mut eigenfunctions = Vec::with_capacity(count);
    for &c in order.iter().take(count) {
        eigenvalues.push(-eig.eigenvalues[c]);
        let mut u = vec![0.0; op.len()];
        for (j, &i) in op.active.iter().enumerate() {
            u[i] = eig.eigenvectors[(j, c)] / w[j].sqrt();
        }
        let norm = op.norm(&u);
        let mass: f64 = op.active.iter().map(|&i| op.weights[i] * u[i]).sum();
        let first = op.active.iter().map(|&i| u[i]).find(|v| v.abs() > 1e-12 * norm).unwrap_or(1.0);
        let tie = mass.abs() <= 1e-10 * norm * w.iter().sum::<f64>().sqrt();
        let sign = if (!tie && mass < 0.0) || (tie && first < 0.0) { -1.0 } else { 1.0 };
        u.iter_mut().for_each(|v| *v *= sign / norm);
        eigenfunctions.push(u);
    }
    Ok(SpectrumReport { mode: op.mode, eigenvalues, eigenfunctions })
}

/// Lowest eigenvalue of `L` on `Σ ∩ B_R` with Dirichlet conditions.
pub fn dirichlet_mu1(surface: &Surface, radius: f64) -> Result<f64> {
    let g = surface.local_geometry()?;
    let op = assemble_l_with(&g, 0, Boundary::Dirichlet { radius })?;
    if op.active.len() < 8 {
        return Err(Error::Domain(format!("B_{radius} contains only {} interior nodes", op.active.len())));
    }
    // the ball must not reach the truncation
    for (k, end) in g.ends.iter().enumerate() {
        if *end == crate::geometry::End::Free {
            let i = if k == 0 { 0 } else { g.len() - 1 };
            if g.radius_sq(i) < radius * radius {
                return Err(Error::Domain(format!("B_{radius} reaches the truncated end at node {i}")));
            }
        }
    }
    Ok(eigen(&op, 1)?.eigenvalues[0])
}

// ---------------------------------------------------------------------------
// eigenfunction identities

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenDefects {
    /// `‖LH − H‖ / ‖H‖`, weighted.
    pub mean_curvature: f64,
    /// `(direction, ‖L⟨v,n⟩ − ½⟨v,n⟩‖ / ‖⟨v,n⟩‖)`; directions whose field
    /// vanishes identically are reported with an absolute defect.
    pub translations: Vec<(String, f64)>,
}

impl EigenDefects {
    pub fn max(&self) -> f64 {
        self.translations.iter().map(|t| t.1).fold(self.mean_curvature, f64::max)
    }
}

fn relative_defect(op: &WeightedOperator, u: &[f64], eigenvalue: f64) -> f64 {
    let lu = op.apply(u);
    let diff: Vec<f64> = lu.iter().zip(u).map(|(a, b)| a - eigenvalue * b).collect();
    let norm = op.norm(u);
    let scale = op.active.iter().map(|&i| op.weights[i]).sum::<f64>().sqrt();
    if norm > 1e-8 * scale {
        op.norm(&diff) / norm
    } else {
        op.norm(&diff) / scale
    }
}

/// `LH = H` and `L⟨v,n⟩ = ½⟨v,n⟩` on a shrinker; `v` runs over the ambient
/// basis (on surfaces of revolution the horizontal directions are the
/// `m = 1` field `n_r`).
pub fn verify_eigenfunctions(surface: &Surface) -> Result<EigenDefects> {
    let g = surface.local_geometry()?;
    residual_with(&g).require_shrinker()?;
    let op = assemble_l_with(&g, 0, Boundary::Natural)?;
    let mean_curvature = relative_defect(&op, &g.mean_curvature, -(-1.0));
    let mut translations = Vec::new();
    match g.model {
        Model::Planar => {
            for (k, name) in ["x", "y"].iter().enumerate() {
                let f: Vec<f64> = g.normal.iter().map(|n| n[k]).collect();
                translations.push((name.to_string(), relative_defect(&op, &f, 0.5)));
            }
        }
        Model::Axisymmetric => {
            let nz: Vec<f64> = g.normal.iter().map(|n| n[1]).collect();
            translations.push(("z".into(), relative_defect(&op, &nz, 0.5)));
            let op1 = assemble_l_with(&g, 1, Boundary::Natural)?;
            let mut nr: Vec<f64> = g.normal.iter().map(|n| n[0]).collect();
            for i in 0..g.len() {
                if !op1.active.contains(&i) {
                    nr[i] = 0.0;
                }
            }
            translations.push(("x".into(), relative_defect(&op1, &nr, 0.5)));
        }
    }
    Ok(EigenDefects { mean_curvature, translations })
}

/// Closed-form defects on a round product: `(|A|² + ½ − 1) H` and, for a
/// first spherical harmonic `⟨v,n⟩`, `−k/R² + |A|² + ½ − ½`.
pub fn round_eigen_defects(p: &RoundProduct) -> EigenDefects {
    let geo = p.geometry();
    let h = (geo.a_squared + 0.5 - 1.0).abs() * geo.mean_curvature;
    let mut translations = Vec::new();
    if p.sphere_dim > 0 {
        let k = p.sphere_dim as f64;
        translations.push(("sphere".into(), (-k / (p.radius * p.radius) + geo.a_squared).abs()));
    } else {
        translations.push(("normal".into(), 0.0));
    }
    EigenDefects { mean_curvature: h, translations }
}

// ---------------------------------------------------------------------------
// second variation

/// Variation of the centre: `y = (y_x, y_z)` for surfaces of revolution,
/// `(y_x, y_y)` for curves.
pub type Shift = [f64; 2];

/// `(4π)^{-n/2} Σ_i w_i v_i`, the normalized weighted integral.
fn normalized(op: &WeightedOperator, g: &LocalGeometry, v: impl Fn(usize) -> f64) -> f64 {
    let n = g.dim() as f64;
    (4.0 * PI * op.scale).powf(-n / 2.0) * op.active.iter().map(|&i| op.weights[i] * v(i)).sum::<f64>()
}

/// Angular averages of `⟨y,n⟩`-type terms at node `i`: returns
/// `(avg ⟨y,n⟩, avg ⟨y,n⟩²)` for axisymmetric integrands.
fn normal_shift(g: &LocalGeometry, i: usize, y: Shift) -> (f64, f64) {
    let n = g.normal[i];
    match g.model {
        Model::Planar => {
            let v = y[0] * n[0] + y[1] * n[1];
            (v, v * v)
        }
        Model::Axisymmetric => (y[1] * n[1], (y[1] * n[1]).powi(2) + 0.5 * (y[0] * n[0]).powi(2)),
    }
}

/// Second variation at a shrinker, about `(0, 1)`:
/// `F'' = (4π)^{-n/2} ∫ (−fLf + 2fhH − h²H² + f⟨y,n⟩ − ⟨y,n⟩²/2) e^{-|x|²/4}`.
pub fn second_variation(surface: &Surface, f: &[f64], h: f64, y: Shift) -> Result<f64> {
    let g = surface.local_geometry()?;
    let res = residual_with(&g);
    if !res.is_shrinker() {
        return Err(Error::Domain(format!(
            "surface is not critical for F (residual {:.3e}); use general_second_variation",
            res.max
        )));
    }
    let op = assemble_l_with(&g, 0, Boundary::Natural)?;
    Ok(second_variation_with(&g, &op, f, h, y))
}

pub fn second_variation_with(g: &LocalGeometry, op: &WeightedOperator, f: &[f64], h: f64, y: Shift) -> f64 {
    let lf = op.apply(f);
    normalized(op, g, |i| {
        let hh = g.mean_curvature[i];
        let (yn, yn2) = normal_shift(g, i, y);
        -f[i] * lf[i] + 2.0 * f[i] * h * hh - h * h * hh * hh + f[i] * yn - 0.5 * yn2
    })
}

/// Second-order parts of the variation: `f' = ∂_s f`, `h' = ∂_ss t_s`,
/// `y' = ∂_ss x_s`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Acceleration {
    pub f: Option<Vec<f64>>,
    pub h: f64,
    pub y: Shift,
}

/// Second variation of `F_{x_s,t_s}(Σ_s)` at an arbitrary `(x0, t0)`,
/// including the first-variation terms that vanish only at critical points.
#[allow(clippy::too_many_arguments)]
pub fn general_second_variation(
    surface: &Surface,
    x0: [f64; 2],
    t0: f64,
    f: &[f64],
    h: f64,
    y: Shift,
    acc: &Acceleration,
) -> Result<f64> {
    let g = surface.local_geometry()?;
    let op = assemble_centered(&g, x0, t0, 0, Boundary::Natural)?;
    if g.model == Model::Axisymmetric && y[0] != 0.0 {
        // ⟨x − x0, y⟩ picks up r cos φ; handled by angular averaging below
    }
    let n = g.dim() as f64;
    let lf = op.apply(f);
    let zero = vec![0.0; g.len()];
    let fp = acc.f.as_deref().unwrap_or(&zero);
    if fp.len() != g.len() || f.len() != g.len() {
        return Err(Error::Domain("variation fields must have one value per node".into()));
    }
    let value = normalized(&op, &g, |i| {
        let p = g.position[i];
        let d = [p[0] - x0[0], p[1] - x0[1]];
        let d2 = d[0] * d[0] + d[1] * d[1];
        let nn = g.normal[i];
        let dn = d[0] * nn[0] + d[1] * nn[1];
        let hh = g.mean_curvature[i];
        let (yn, _) = normal_shift(&g, i, y);
        let y2 = y[0] * y[0] + y[1] * y[1];
        let first = f[i] * (hh - dn / (2.0 * t0));
        let time = d2 / (4.0 * t0 * t0) - n / (2.0 * t0);
        // ⟨x − x0, y⟩ = a + b cos φ on surfaces of revolution
        let (dy, dy_osc, dyp) = match g.model {
            Model::Planar => (d[0] * y[0] + d[1] * y[1], 0.0, d[0] * acc.y[0] + d[1] * acc.y[1]),
            Model::Axisymmetric => (d[1] * y[1], p[0] * y[0], d[1] * acc.y[1]),
        };
        let q = first + h * time + dy / (2.0 * t0);
        let q2 = q * q + 0.5 * (dy_osc / (2.0 * t0)).powi(2);
        -f[i] * lf[i] + f[i] * h * dn / (t0 * t0) - h * h * (d2 - n * t0) / (2.0 * t0.powi(3)) + f[i] * yn / t0
            - y2 / (2.0 * t0)
            - h * dy / (t0 * t0)
            + q2
            + fp[i] * (hh - dn / (2.0 * t0))
            + acc.h * time
            + dyp / (2.0 * t0)
    });
    Ok(value)
}

// ---------------------------------------------------------------------------
// F-stability

/// Optimal `(h, y)` for a given `f` and the resulting value of `F''`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub f: Vec<f64>,
    pub h: f64,
    pub y: Shift,
    /// `F''(f, h, y)`, certified negative for unstable verdicts.
    pub second_variation: f64,
    /// `F'' / ‖f‖²` in the normalized weighted norm.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum FVerdict {
    Stable { min_ratio: f64 },
    Unstable { witness: Witness },
}

impl FVerdict {
    pub fn is_stable(&self) -> bool {
        matches!(self, FVerdict::Stable { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyVerdict {
    /// F-stable, hence a local entropy minimizer.
    Stable,
    /// F-unstable and not split off a line: an entropy-decreasing
    /// perturbation exists.
    Unstable,
    /// F-unstable but split off a line; F-instability says nothing here.
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub mu1: f64,
    pub spectrum: Vec<f64>,
    pub h_eigen_defect: f64,
    pub translation_eigen_defects: Vec<(String, f64)>,
    /// Reduced quadratic form minimized over all fields.
    pub route_a: FVerdict,
    /// Spectral shortcut through `μ1 < −1` and the negative eigenspaces.
    pub route_b: FVerdict,
    pub consistent: bool,
    pub f_stable: bool,
    pub entropy_verdict: EntropyVerdict,
    /// Entropy verdicts follow from F-stability, never from a direct search.
    pub entropy_basis: String,
    pub residual: f64,
}

/// Relative tolerance on the reduced form for a stable verdict.
pub const STABILITY_TOL: f64 = 1e-6;
/// Singular values below this fraction of the largest are null directions.
pub const PSEUDO_INVERSE_CUTOFF: f64 = 1e-10;

struct Reduced {
    /// Weighted `H` and `n_k` columns for the eliminations.
    h_col: Vec<f64>,
    hh: f64,
    n_cols: Vec<Vec<f64>>,
    m_pinv: DMatrix<f64>,
    /// Map from the eliminated `y` coordinates to `Shift`.
    y_axes: Vec<usize>,
}

fn reduced_parts(g: &LocalGeometry, op: &WeightedOperator) -> Reduced {
    let c = (4.0 * PI).powf(-(g.dim() as f64) / 2.0);
    let h_col: Vec<f64> = g.mean_curvature.clone();
    let hh = c * op.inner(&h_col, &h_col);
    let y_axes: Vec<usize> = match g.model {
        Model::Planar => vec![0, 1],
        // horizontal shifts are m = 1 fields, orthogonal to axisymmetric f
        Model::Axisymmetric => vec![1],
    };
    let n_cols: Vec<Vec<f64>> = y_axes.iter().map(|&k| g.normal.iter().map(|n| n[k]).collect()).collect();
    let d = n_cols.len();
    let mut m = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            m[(a, b)] = c * op.inner(&n_cols[a], &n_cols[b]);
        }
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let m_pinv = svd
        .pseudo_inverse(PSEUDO_INVERSE_CUTOFF * smax.max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DMatrix::zeros(d, d));
    Reduced { h_col, hh, n_cols, m_pinv, y_axes }
}

fn optimal_witness(g: &LocalGeometry, op: &WeightedOperator, r: &Reduced, f: &[f64]) -> Witness {
    let c = (4.0 * PI).powf(-(g.dim() as f64) / 2.0);
    let h = if r.hh > 0.0 { c * op.inner(f, &r.h_col) / r.hh } else { 0.0 };
    let b = nalgebra::DVector::from_iterator(r.n_cols.len(), r.n_cols.iter().map(|col| c * op.inner(f, col)));
    let yv = &r.m_pinv * b;
    let mut y = [0.0; 2];
    for (j, &k) in r.y_axes.iter().enumerate() {
        y[k] = yv[j];
    }
    let value = second_variation_with(g, op, f, h, y);
    let norm2 = c * op.inner(f, f);
    Witness { f: f.to_vec(), h, y, second_variation: value, ratio: value / norm2 }
}

/// Route (a): eliminate `h` and `y` in closed form and minimize the reduced
/// form `Q(f) = −⟨f,Lf⟩ + ⟨f,H⟩²/⟨H,H⟩ + ½ bᵀM⁺b` over all nodal fields.
fn route_a(g: &LocalGeometry, op: &WeightedOperator, r: &Reduced) -> Result<FVerdict> {
    let c = (4.0 * PI).powf(-(g.dim() as f64) / 2.0);
    let k = op.active.len();
    let w: Vec<f64> = op.active.iter().map(|&i| c * op.weights[i]).collect();
    let l = op.matrix();
    let mut q = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            q[(i, j)] = -w[i] * l[(i, j)];
        }
    }
    let hw: Vec<f64> = op.active.iter().zip(&w).map(|(&i, wi)| wi * r.h_col[i]).collect();
    if r.hh > 0.0 {
        for i in 0..k {
            for j in 0..k {
                q[(i, j)] += hw[i] * hw[j] / r.hh;
            }
        }
    }
    let nw: Vec<Vec<f64>> =
        r.n_cols.iter().map(|col| op.active.iter().zip(&w).map(|(&i, wi)| wi * col[i]).collect()).collect();
    for a in 0..nw.len() {
        for b in 0..nw.len() {
            let m = 0.5 * r.m_pinv[(a, b)];
            if m != 0.0 {
                for i in 0..k {
                    for j in 0..k {
                        q[(i, j)] += m * nw[a][i] * nw[b][j];
                    }
                }
            }
        }
    }
    // generalized problem Q f = λ W f through W^{-1/2} Q W^{-1/2}
    let mut s = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            s[(i, j)] = q[(i, j)] / (w[i] * w[j]).sqrt();
        }
    }
    let s = (&s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(s, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Eigen("reduced form eigensolver did not converge".into()))?;
    let (imin, &lmin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Eigen("empty reduced form".into()))?;
    if lmin >= -STABILITY_TOL {
        return Ok(FVerdict::Stable { min_ratio: lmin });
    }
    let mut f = vec![0.0; op.len()];
    for (j, &i) in op.active.iter().enumerate() {
        f[i] = eig.eigenvectors[(j, imin)] / w[j].sqrt();
    }
    let witness = optimal_witness(g, op, r, &f);
    Ok(FVerdict::Unstable { witness })
}

/// Route (b): `μ1 < −1` gives the witness `u1`; otherwise every negative
/// eigenfunction is tested after the optimal `(h, y)`.
fn route_b(g: &LocalGeometry, op: &WeightedOperator, r: &Reduced, spectrum: &SpectrumReport) -> FVerdict {
    if spectrum.eigenvalues[0] < -1.0 - 1e-6 {
        let w = optimal_witness(g, op, r, &spectrum.eigenfunctions[0]);
        if w.ratio < -STABILITY_TOL {
            return FVerdict::Unstable { witness: w };
        }
    }
    let mut min_ratio = f64::INFINITY;
    for (mu, u) in spectrum.eigenvalues.iter().zip(&spectrum.eigenfunctions) {
        if *mu >= 0.0 {
            break;
        }
        let w = optimal_witness(g, op, r, u);
        if w.ratio < -STABILITY_TOL {
            return FVerdict::Unstable { witness: w };
        }
        min_ratio = min_ratio.min(w.ratio);
    }
    FVerdict::Stable { min_ratio }
}

/// Two independent F-stability verdicts on a verified shrinker, in the
/// axisymmetric class on surfaces of revolution.
pub fn f_stability_test(surface: &Surface) -> Result<StabilityReport> {
    let g = surface.local_geometry()?;
    let res: ShrinkerResidual = residual_with(&g);
    res.require_shrinker()?;
    let op = assemble_l_with(&g, 0, Boundary::Natural)?;
    let count = op.active.len().min(24);
    let spectrum = eigen(&op, count)?;
    let defects = verify_eigenfunctions(surface)?;
    let r = reduced_parts(&g, &op);
    let a = route_a(&g, &op, &r)?;
    let b = route_b(&g, &op, &r, &spectrum);
    let consistent = a.is_stable() == b.is_stable();
    let f_stable = a.is_stable() && b.is_stable();
    let splits_line = g.ends.contains(&crate::geometry::End::Free);
    let entropy_verdict = match (f_stable, splits_line) {
        (true, _) => EntropyVerdict::Stable,
        (false, false) => EntropyVerdict::Unstable,
        (false, true) => EntropyVerdict::Undetermined,
    };
    Ok(StabilityReport {
        mu1: spectrum.eigenvalues[0],
        spectrum: spectrum.eigenvalues.clone(),
        h_eigen_defect: defects.mean_curvature,
        translation_eigen_defects: defects.translations,
        route_a: a,
        route_b: b,
        consistent,
        f_stable,
        entropy_verdict,
        entropy_basis: "derived from the F-stability verdict".into(),
        residual: res.max,
    })
}

/// Smooth cutoff: 1 on `[0, a]`, 0 beyond `a + 2`, `C²` in between.
pub fn cutoff(s: f64, a: f64) -> f64 {
    let t = ((s.abs() - a) / 2.0).clamp(0.0, 1.0);
    1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

/// The witness `φ_j(z) z` on a cylinder about the z-axis, with `F''` at the
/// optimal `(h, y)`.
pub fn cylinder_witness(surface: &Surface, j: f64) -> Result<Witness> {
    let g = surface.local_geometry()?;
    residual_with(&g).require_shrinker()?;
    let op = assemble_l_with(&g, 0, Boundary::Natural)?;
    let r = reduced_parts(&g, &op);
    let f: Vec<f64> = g.position.iter().map(|p| cutoff(p[1], j) * p[1]).collect();
    Ok(optimal_witness(&g, &op, &r, &f))
}

// ---------------------------------------------------------------------------
// further checks

/// Largest violation of `L|A| ≥ |A|` over the nodes where `|A| > 0`.
pub fn simons_check(surface: &Surface) -> Result<f64> {
    let g = surface.local_geometry()?;
    let op = assemble_l_with(&g, 0, Boundary::Natural)?;
    let a: Vec<f64> = g.a_squared.iter().map(|v| v.sqrt()).collect();
    let la = op.apply(&a);
    Ok((0..g.len()).filter(|&i| a[i] > 0.0).map(|i| (a[i] - la[i]).max(0.0)).fold(0.0, f64::max))
}

/// `−⟨f, Lf⟩ / ⟨f, f⟩`.
pub fn rayleigh_quotient(op: &WeightedOperator, f: &[f64]) -> f64 {
    -op.inner(f, &op.apply(f)) / op.inner(f, f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanCurvatureSign {
    Positive,
    Zero,
    Changes,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationNote {
    pub sign: MeanCurvatureSign,
    /// Matched round product and the largest radial distance to it.
    pub model: Option<(RoundProduct, f64)>,
    pub mu1: f64,
    /// For sign-changing `H`: `μ1 < −1` and F-unstable.
    pub consistent: bool,
}

/// Mean-convex shrinkers are round products; sign-changing `H` forces
/// `μ1 < −1`.
pub fn classification_verdict(surface: &Surface) -> Result<ClassificationNote> {
    let g = surface.local_geometry()?;
    residual_with(&g).require_shrinker()?;
    let hmax = g.mean_curvature.iter().fold(0.0f64, |m, h| m.max(h.abs()));
    let tol = 1e-6;
    let sign = if hmax < tol {
        MeanCurvatureSign::Zero
    } else if g.mean_curvature.iter().all(|&h| h > -tol) {
        MeanCurvatureSign::Positive
    } else {
        MeanCurvatureSign::Changes
    };
    let op = assemble_l_with(&g, 0, Boundary::Natural)?;
    let mu1 = eigen(&op, 1)?.eigenvalues[0];
    let radial = |target: f64, f: &dyn Fn([f64; 2]) -> f64| {
        g.position.iter().map(|&p| (f(p) - target).abs()).fold(0.0, f64::max)
    };
    let model = match (sign, g.model, surface) {
        (MeanCurvatureSign::Positive, Model::Planar, _) => {
            Some((RoundProduct::shrinker(1, 1)?, radial(2f64.sqrt(), &|p| p[0].hypot(p[1]))))
        }
        (MeanCurvatureSign::Positive, Model::Axisymmetric, Surface::Profile(p)) => match p.topology() {
            crate::geometry::ProfileTopology::SphereLike => {
                Some((RoundProduct::shrinker(2, 2)?, radial(2.0, &|p| p[0].hypot(p[1]))))
            }
            crate::geometry::ProfileTopology::CylinderLike => {
                Some((RoundProduct::shrinker(2, 1)?, radial(2f64.sqrt(), &|p| p[0])))
            }
            crate::geometry::ProfileTopology::TorusLike => None,
        },
        (MeanCurvatureSign::Zero, _, _) => Some((RoundProduct::hyperplane(g.dim())?, 0.0)),
        _ => None,
    };
    let consistent = match sign {
        MeanCurvatureSign::Changes => mu1 < -1.0 && !f_stability_test(surface)?.f_stable,
        MeanCurvatureSign::Positive => model.as_ref().is_some_and(|m| m.1 < 1e-3),
        MeanCurvatureSign::Zero => true,
    };
    Ok(ClassificationNote { sign, model, mu1, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DiscreteCurve, ProfileSurface};

    fn circle(n: usize) -> Surface {
        DiscreteCurve::circle(2f64.sqrt(), n).unwrap().into()
    }

    #[test]
    fn constants_and_cosines_on_circle() {
        let c = circle(256);
        let g = c.local_geometry().unwrap();
        let op = assemble_l(&c).unwrap();
        let one = op.apply(&vec![1.0; g.len()]);
        assert!(one.iter().all(|v| (v - 1.0).abs() < 1e-6));
        let theta: Vec<f64> = g.position.iter().map(|p| p[1].atan2(p[0])).collect();
        let cos: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
        let lc = op.apply(&cos);
        assert!(lc.iter().zip(&cos).all(|(a, b)| (a - 0.5 * b).abs() < 1e-4));
        assert!(op.symmetry_defect() < 1e-12);
    }

    #[test]
    fn circle_spectrum_matches_fourier_modes() {
        let c = circle(512);
        let s = eigen(&assemble_l(&c).unwrap(), 7).unwrap();
        let expect = [-1.0, -0.5, -0.5, 1.0, 1.0, 3.5, 3.5];
        for (a, b) in s.eigenvalues.iter().zip(expect) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
        assert!(s.eigenfunctions[0].iter().all(|v| *v > 0.0));
    }

    #[test]
    fn sphere_axisymmetric_spectrum() {
        let s: Surface = ProfileSurface::sphere(2.0, 257).unwrap().into();
        let sp = eigen(&assemble_l(&s).unwrap(), 4).unwrap();
        for (k, mu) in sp.eigenvalues.iter().enumerate() {
            let k = k as f64;
            assert!((mu - ((k * k + k) / 4.0 - 1.0)).abs() < 1e-3, "{k}: {mu}");
        }
    }

    #[test]
    fn eigenfunction_identities() {
        let c = verify_eigenfunctions(&circle(256)).unwrap();
        assert!(c.max() < 1e-4, "{c:?}");
        let s: Surface = ProfileSurface::sphere(2.0, 257).unwrap().into();
        assert!(verify_eigenfunctions(&s).unwrap().max() < 1e-4);
        let cyl: Surface = ProfileSurface::cylinder(2f64.sqrt(), 12.0, 481).unwrap().into();
        assert!(verify_eigenfunctions(&cyl).unwrap().max() < 1e-10);
        assert!(round_eigen_defects(&RoundProduct::shrinker(2, 1).unwrap()).max() < 1e-15);
        let u: Surface = DiscreteCurve::circle(1.0, 64).unwrap().into();
        assert!(matches!(verify_eigenfunctions(&u), Err(Error::NotShrinker { .. })));
    }

    #[test]
    fn verdicts() {
        let c = f_stability_test(&circle(256)).unwrap();
        assert!(c.f_stable && c.consistent, "{:?} {:?}", c.route_a, c.route_b);
        // the l = 1 mode carries an O(h²) eigenvalue error that must stay
        // below the verdict tolerance
        let s: Surface = ProfileSurface::sphere(2.0, 1025).unwrap().into();
        let r = f_stability_test(&s).unwrap();
        assert!(r.f_stable && r.consistent, "{:?} {:?}", r.route_a, r.route_b);
        assert_eq!(r.entropy_verdict, EntropyVerdict::Stable);
        let cyl: Surface = ProfileSurface::cylinder(2f64.sqrt(), 12.0, 481).unwrap().into();
        let r = f_stability_test(&cyl).unwrap();
        assert!(!r.f_stable && r.consistent);
        let w = cylinder_witness(&cyl, 3.0).unwrap();
        assert!(w.second_variation < 0.0);
    }

    #[test]
    fn mode_two_is_positive_without_shift() {
        // cos 2θ is orthogonal to H and to ⟨y,n⟩, so (h, y) = 0 is optimal
        // and any shift only lowers F''
        let c = circle(256);
        let g = c.local_geometry().unwrap();
        let f: Vec<f64> = g.position.iter().map(|p| (2.0 * p[1].atan2(p[0])).cos()).collect();
        let best = second_variation(&c, &f, 0.0, [0.0, 0.0]).unwrap();
        assert!(best > 0.0);
        for &(h, y) in &[(0.7, [0.3, -0.2]), (-2.0, [1.0, 1.0])] {
            assert!(second_variation(&c, &f, h, y).unwrap() < best);
        }
        let op = assemble_l(&c).unwrap();
        let r = reduced_parts(&g, &op);
        let w = optimal_witness(&g, &op, &r, &f);
        assert!(w.h.abs() < 1e-10 && w.y.iter().all(|v| v.abs() < 1e-10));
        assert!((w.second_variation - best).abs() < 1e-12);
    }

    #[test]
    fn general_reduces_at_shrinkers() {
        let c = circle(256);
        let g = c.local_geometry().unwrap();
        let f: Vec<f64> = g.position.iter().map(|p| 0.3 + p[0] * 0.2 - p[1] * p[0] * 0.1).collect();
        let a = second_variation(&c, &f, 0.4, [0.2, -0.1]).unwrap();
        let b = general_second_variation(&c, [0.0, 0.0], 1.0, &f, 0.4, [0.2, -0.1], &Acceleration::default()).unwrap();
        assert!((a - b).abs() < 1e-6 * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn dirichlet_sweep_on_cylinder() {
        let cyl: Surface = ProfileSurface::cylinder(2f64.sqrt(), 12.0, 481).unwrap().into();
        let mus: Vec<f64> = [3.0, 5.0, 8.0].iter().map(|&r| dirichlet_mu1(&cyl, r).unwrap()).collect();
        assert!(mus[0] > mus[1] && mus[1] > mus[2], "{mus:?}");
        assert!((mus[2] + 1.0).abs() < 0.05);
        assert!(dirichlet_mu1(&cyl, 1.0).is_err());
    }

    #[test]
    fn simons_on_round_shrinkers() {
        assert!(simons_check(&circle(256)).unwrap() < 1e-6);
    }
}
