//! Normal graphs over a surface and the linearization of `H` and `n`.

use super::{LocalGeometry, Surface};
use crate::error::{Error, Result};

/// Bound on `|s f| max|A|` that keeps a normal graph embedded.
pub const GRAPH_AMPLITUDE_LIMIT: f64 = 0.5;

impl Surface {
    /// The surface `x + s f(x) n(x)`, resampled when the perturbation
    /// distorts the node spacing past the resampling trigger.
    pub fn normal_graph(&self, f: &[f64], s: f64) -> Result<Surface> {
        let g = self.local_geometry()?;
        self.normal_graph_with(&g, f, s)
    }

    pub fn normal_graph_with(&self, g: &LocalGeometry, f: &[f64], s: f64) -> Result<Surface> {
        if f.len() != g.len() {
            return Err(Error::Domain(format!("field has {} values for {} nodes", f.len(), g.len())));
        }
        let max_a = g.max_abs_a();
        let mut worst = (0, 0.0);
        for (i, fi) in f.iter().enumerate() {
            let v = (s * fi).abs() * max_a;
            if !v.is_finite() {
                return Err(Error::AmplitudeTooLarge { index: i, value: v });
            }
            if v > worst.1 {
                worst = (i, v);
            }
        }
        if worst.1 >= GRAPH_AMPLITUDE_LIMIT {
            return Err(Error::AmplitudeTooLarge { index: worst.0, value: worst.1 });
        }
        let nodes: Vec<[f64; 2]> = g
            .position
            .iter()
            .zip(&g.normal)
            .zip(f)
            .map(|((p, n), fi)| [p[0] + s * fi * n[0], p[1] + s * fi * n[1]])
            .collect();
        let mut nodes = nodes;
        for (i, p) in nodes.iter_mut().enumerate() {
            if g.is_pole(i) {
                p[0] = 0.0;
            }
        }
        self.with_nodes(nodes)?.resample_if_needed()
    }

    /// `(H′, n′)` for the normal variation `f n`:
    /// `H′ = −Δf − |A|² f` and `n′ = −∇f`.
    pub fn linearized_h_and_normal(&self, f: &[f64]) -> Result<(Vec<f64>, Vec<[f64; 2]>)> {
        let g = self.local_geometry()?;
        Ok(linearized_h_and_normal(&g, f))
    }
}

pub fn linearized_h_and_normal(g: &LocalGeometry, f: &[f64]) -> (Vec<f64>, Vec<[f64; 2]>) {
    let lap = g.laplacian(f);
    let h_prime = lap.iter().zip(f).zip(&g.a_squared).map(|((l, f), a2)| -l - a2 * f).collect();
    let n_prime = g.gradient(f).into_iter().map(|d| [-d[0], -d[1]]).collect();
    (h_prime, n_prime)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DiscreteCurve, ProfileSurface};

    fn sqrt2_circle(n: usize) -> Surface {
        DiscreteCurve::circle(2f64.sqrt(), n).unwrap().into()
    }

    #[test]
    fn constant_shift_of_circle() {
        let c = sqrt2_circle(128);
        let f = vec![1.0; 128];
        let g = c.normal_graph(&f, 0.1).unwrap();
        for p in g.nodes() {
            assert!((p[0].hypot(p[1]) - (2f64.sqrt() + 0.1)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_field_is_identity() {
        let s: Surface = ProfileSurface::sphere(2.0, 65).unwrap().into();
        let g = s.normal_graph(&vec![0.0; 65], 0.7).unwrap();
        assert_eq!(g, s);
    }

    #[test]
    fn amplitude_guard_names_node() {
        let c = sqrt2_circle(64);
        let mut f = vec![0.0; 64];
        f[17] = 1.0;
        match c.normal_graph(&f, 1.0) {
            Err(Error::AmplitudeTooLarge { index, .. }) => assert_eq!(index, 17),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn linearization_constants() {
        let c = sqrt2_circle(256);
        let (hp, np) = c.linearized_h_and_normal(&vec![1.0; 256]).unwrap();
        assert!(hp.iter().all(|h| (h + 0.5).abs() < 1e-4));
        assert!(np.iter().all(|n| n[0].abs() + n[1].abs() < 1e-12));

        let u: Surface = DiscreteCurve::circle(1.0, 256).unwrap().into();
        let f: Vec<f64> = u.nodes().iter().map(|p| p[0]).collect();
        let (hp, _) = u.linearized_h_and_normal(&f).unwrap();
        assert!(hp.iter().all(|h| h.abs() < 1e-4));
    }

    #[test]
    fn poles_stay_on_axis() {
        let s: Surface = ProfileSurface::sphere(2.0, 65).unwrap().into();
        let f: Vec<f64> = s.nodes().iter().map(|p| 1.0 + 0.3 * p[1]).collect();
        let g = s.normal_graph(&f, 0.05).unwrap();
        assert_eq!(g.nodes()[0][0], 0.0);
        assert_eq!(g.nodes()[64][0], 0.0);
    }
}
