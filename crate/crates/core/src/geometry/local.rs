use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::stencil::{self, End};
use crate::error::{Error, Result};

/// Which ambient model the node coordinates live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Curve in R²; coordinates `(x, y)`, n = 1.
    Planar,
    /// Surface of revolution in R³; coordinates `(r, z)`, n = 2.
    Axisymmetric,
}

impl Model {
    pub fn dim(self) -> usize {
        match self {
            Model::Planar => 1,
            Model::Axisymmetric => 2,
        }
    }
}

/// Polygon edge with its arc-corrected length and the area of the flux
/// interface it carries (1 for curves, the circumference `2πr` for
/// surfaces of revolution).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
    pub midpoint: [f64; 2],
    pub flux_area: f64,
}

/// Per-node geometric data.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGeometry {
    pub model: Model,
    pub ends: [End; 2],
    pub position: Vec<[f64; 2]>,
    pub tangent: Vec<[f64; 2]>,
    pub normal: Vec<[f64; 2]>,
    /// `H = div n`.
    pub mean_curvature: Vec<f64>,
    /// `|A|²`.
    pub a_squared: Vec<f64>,
    /// Meridian and rotational principal curvatures (the second is zero for
    /// curves), signed so that `H` is their sum.
    pub principal: Vec<[f64; 2]>,
    /// Quadrature weight `dμ` of each node.
    pub measure: Vec<f64>,
    /// Control-volume measure used by the difference operators; equals
    /// `measure` except at poles.
    pub cell: Vec<f64>,
    /// `|dx/dσ|` for the node-index parameter σ.
    pub speed: Vec<f64>,
    pub edges: Vec<Edge>,
}

pub(crate) fn compute(model: Model, nodes: &[[f64; 2]], ends: [End; 2], orientation: f64) -> Result<LocalGeometry> {
    let n = nodes.len();
    let p = |i: isize| stencil::point(nodes, ends, i);
    let mut tangent = Vec::with_capacity(n);
    let mut normal = Vec::with_capacity(n);
    let mut speed = Vec::with_capacity(n);
    let mut principal = Vec::with_capacity(n);
    for i in 0..n as isize {
        let dx = stencil::d1(|k| p(k)[0], i);
        let dy = stencil::d1(|k| p(k)[1], i);
        let ddx = stencil::d2(|k| p(k)[0], i);
        let ddy = stencil::d2(|k| p(k)[1], i);
        let v = dx.hypot(dy);
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::DegenerateEdge { index: i as usize, next: (i as usize + 1) % n });
        }
        let t = [dx / v, dy / v];
        let nrm = [orientation * t[1], -orientation * t[0]];
        let kappa = orientation * (dx * ddy - dy * ddx) / (v * v * v);
        let second = match model {
            Model::Planar => 0.0,
            Model::Axisymmetric => {
                let r = nodes[i as usize][0];
                if r == 0.0 {
                    // umbilic at a pole: n_r / r -> d n_r / ds = κ₁
                    if ends[0] != End::Pole && ends[1] != End::Pole {
                        return Err(Error::Pole(i as usize));
                    }
                    kappa
                } else {
                    nrm[0] / r
                }
            }
        };
        tangent.push(t);
        normal.push(nrm);
        speed.push(v);
        principal.push([kappa, second]);
    }

    let mean_curvature: Vec<f64> = principal.iter().map(|k| k[0] + k[1]).collect();
    let a_squared: Vec<f64> = principal.iter().map(|k| k[0] * k[0] + k[1] * k[1]).collect();

    let mut measure: Vec<f64> = match model {
        Model::Planar => speed.clone(),
        Model::Axisymmetric => nodes.iter().zip(&speed).map(|(q, v)| 2.0 * PI * q[0] * v).collect(),
    };
    let mut cell = measure.clone();
    for (k, end) in ends.iter().enumerate() {
        let i = if k == 0 { 0 } else { n - 1 };
        let inward = |j: usize| if k == 0 { j } else { n - 1 - j };
        match end {
            End::Free => {
                cell[i] *= 0.5;
                // Gregory end weights keep the rule fourth order
                for (j, w) in [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0].into_iter().enumerate() {
                    measure[inward(j)] *= w;
                }
            }
            // Euler–Maclaurin end correction for the integrand 2π r g, odd
            // across the axis
            End::Pole => {
                measure[i] = PI * speed[i] * speed[i] / 6.0;
                cell[i] = measure[i];
            }
            End::Periodic => {}
        }
    }

    let edges: Vec<Edge> = stencil::edge_pairs(n, ends)
        .into_iter()
        .map(|(a, b)| {
            let c = stencil::chord(nodes[a], nodes[b]);
            let k = 0.5 * (principal[a][0] + principal[b][0]);
            let length = c * (1.0 + k * k * c * c / 24.0);
            let midpoint = [0.5 * (nodes[a][0] + nodes[b][0]), 0.5 * (nodes[a][1] + nodes[b][1])];
            let flux_area = match model {
                Model::Planar => 1.0,
                Model::Axisymmetric => 2.0 * PI * midpoint[0],
            };
            Edge { a, b, length, midpoint, flux_area }
        })
        .collect();

    for (k, end) in ends.iter().enumerate() {
        if *end == End::Pole {
            let (i, e) = if k == 0 { (0, edges[0]) } else { (n - 1, edges[edges.len() - 1]) };
            // polar cap of geodesic radius ℓ/2
            cell[i] = 0.25 * PI * e.length * e.length;
        }
    }

    Ok(LocalGeometry {
        model,
        ends,
        position: nodes.to_vec(),
        tangent,
        normal,
        mean_curvature,
        a_squared,
        principal,
        measure,
        cell,
        speed,
        edges,
    })
}

impl LocalGeometry {
    pub fn len(&self) -> usize {
        self.position.len()
    }

    pub fn is_empty(&self) -> bool {
        self.position.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// `∫ f dμ`.
    pub fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.measure.iter().enumerate().map(|(i, m)| f(i) * m).sum()
    }

    /// `∫ f e^{-|x|²/4} dμ`.
    pub fn gaussian_integral(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.integrate(|i| f(i) * self.gaussian(i))
    }

    /// `e^{-|x|²/4}` at node `i`.
    pub fn gaussian(&self, i: usize) -> f64 {
        (-self.radius_sq(i) / 4.0).exp()
    }

    pub fn radius_sq(&self, i: usize) -> f64 {
        let p = self.position[i];
        p[0] * p[0] + p[1] * p[1]
    }

    /// `⟨x, n⟩` at node `i`.
    pub fn support(&self, i: usize) -> f64 {
        let (p, n) = (self.position[i], self.normal[i]);
        p[0] * n[0] + p[1] * n[1]
    }

    pub fn max_abs_a(&self) -> f64 {
        self.a_squared.iter().cloned().fold(0.0, f64::max).sqrt()
    }

    /// Tangential derivative `df/ds` of an (axially symmetric) nodal field.
    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let fi = |k: isize| stencil::scalar(f, self.ends, k);
                stencil::d1(fi, i as isize) / self.speed[i]
            })
            .collect()
    }

    /// Intrinsic gradient `∇f = (df/ds) T` of a nodal field.
    pub fn gradient(&self, f: &[f64]) -> Vec<[f64; 2]> {
        self.derivative(f).into_iter().zip(&self.tangent).map(|(d, t)| [d * t[0], d * t[1]]).collect()
    }

    /// Divergence-form Laplace–Beltrami operator of an axially symmetric
    /// field: `(Δf)_i = (1/cell_i) Σ_e (area_e/ℓ_e)(f_j − f_i)`.
    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for e in &self.edges {
            let flux = e.flux_area / e.length * (f[e.b] - f[e.a]);
            out[e.a] += flux;
            out[e.b] -= flux;
        }
        out.iter_mut().zip(&self.cell).for_each(|(o, c)| *o /= c);
        out
    }

    /// True when the node lies on the rotation axis.
    pub fn is_pole(&self, i: usize) -> bool {
        self.model == Model::Axisymmetric && self.position[i][0] == 0.0
    }
}
