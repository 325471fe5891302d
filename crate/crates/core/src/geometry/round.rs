use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::unit_sphere_area;

/// The analytic product `S^k(radius) × R^{n-k}` in `R^{n+1}`.
///
/// `k = 0` denotes a hyperplane through the origin; its radius is unused
/// and stored as zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundProduct {
    pub ambient_dim: usize,
    pub sphere_dim: usize,
    pub radius: f64,
}

/// Exact pointwise geometry of a [`RoundProduct`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundGeometry {
    pub mean_curvature: f64,
    pub a_squared: f64,
    /// `(4π)^{-n/2} ∫ e^{-|x|²/4} dμ`, the Gaussian area at unit scale.
    pub gaussian_density: f64,
}

impl RoundProduct {
    /// `S^k × R^{n-k}` of the given radius, as a hypersurface of dimension
    /// `n` in `R^{n+1}`.
    pub fn new(n: usize, k: usize, radius: f64) -> Result<Self> {
        if n == 0 || k > n {
            return Err(Error::Domain(format!("need 0 <= k <= n and n >= 1, got n = {n}, k = {k}")));
        }
        if k == 0 {
            return Ok(Self { ambient_dim: n + 1, sphere_dim: 0, radius: 0.0 });
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Domain(format!("round product radius must be positive, got {radius}")));
        }
        Ok(Self { ambient_dim: n + 1, sphere_dim: k, radius })
    }

    /// The self-shrinker `S^k(√(2k)) × R^{n-k}`.
    pub fn shrinker(n: usize, k: usize) -> Result<Self> {
        Self::new(n, k, (2.0 * k as f64).sqrt())
    }

    pub fn hyperplane(n: usize) -> Result<Self> {
        Self::new(n, 0, 0.0)
    }

    /// Hypersurface dimension n.
    pub fn dim(&self) -> usize {
        self.ambient_dim - 1
    }

    pub fn flat_dim(&self) -> usize {
        self.dim() - self.sphere_dim
    }

    pub fn geometry(&self) -> RoundGeometry {
        let k = self.sphere_dim as f64;
        if self.sphere_dim == 0 {
            return RoundGeometry { mean_curvature: 0.0, a_squared: 0.0, gaussian_density: 1.0 };
        }
        let r = self.radius;
        // the flat factors integrate to (4π)^{(n-k)/2} exactly
        let density = (4.0 * std::f64::consts::PI).powf(-k / 2.0)
            * r.powf(k)
            * unit_sphere_area(self.sphere_dim as u32)
            * (-r * r / 4.0).exp();
        RoundGeometry { mean_curvature: k / r, a_squared: k / (r * r), gaussian_density: density }
    }

    /// Largest residual `|H − ⟨x,n⟩/2|`, attained everywhere.
    pub fn shrinker_residual(&self) -> f64 {
        if self.sphere_dim == 0 {
            return 0.0;
        }
        (self.sphere_dim as f64 / self.radius - self.radius / 2.0).abs()
    }
}
