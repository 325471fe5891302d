//! Gaussian-weighted variational tools for mean curvature flow.
//!
//! The crate works on three models of a hypersurface Σ: planar curves,
//! surfaces of revolution given by a meridian profile, and the analytic
//! round products `S^k × R^{n-k}`. On these it evaluates
//!
//! * the functionals `F_{x0,t0}(Σ) = (4πt0)^{-n/2} ∫ e^{-|x-x0|²/4t0}` and the
//!   entropy `λ = sup F` ([`functionals`]),
//! * the self-shrinker residual `H − ⟨x,n⟩/2`, shrinker ODE solvers and
//!   weighted integral identities ([`shrinker`]),
//! * the stability operator `L = Δ + |A|² + ½ − ½⟨x,∇·⟩`, its spectrum and
//!   F-stability verdicts ([`spectral`]),
//! * mean curvature flow, rescaled flow and piecewise flows with
//!   entropy-decreasing replacements ([`flow`]).
//!
//! Sign conventions: `H = div n` with the outward normal, so a round sphere
//! of radius R in R^{n+1} has `H = n/R`; shrinkers satisfy `H = ⟨x,n⟩/2`;
//! eigenvalues are reported as `Lu = −μu`.

pub mod error;
pub mod flow;
pub mod functionals;
pub mod geometry;
pub mod shrinker;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
pub use geometry::{DiscreteCurve, LocalGeometry, ProfileSurface, ProfileTopology, RoundProduct, Surface};
