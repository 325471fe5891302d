//! Hypersurface models and their pointwise geometry.
//!
//! Three fidelity levels are supported:
//!
//! * [`DiscreteCurve`]: a polygon in the plane (hypersurface dimension 1),
//! * [`ProfileSurface`]: a meridian polygon generating a surface of
//!   revolution about the z-axis in R³ (dimension 2),
//! * [`RoundProduct`]: the analytic S^k × R^{n-k}.
//!
//! Orientation follows `H = div n`: the unit normal points out of the
//! enclosed region, so round spheres and circles have `H > 0`. Principal
//! curvatures are reported with the same sign, `H = κ₁ + κ₂`.

mod curve;
pub mod graph;
mod io;
mod local;
mod profile;
mod resample;
mod round;
mod stencil;

pub use curve::DiscreteCurve;
pub use io::{SurfaceFlags, SurfaceKind, SurfaceRecord, SURFACE_SCHEMA};
pub use local::{Edge, LocalGeometry, Model};
pub use profile::{ProfileSurface, ProfileTopology};
pub use resample::ResamplePolicy;
pub use round::{RoundGeometry, RoundProduct};
pub use stencil::End;

use crate::error::{Error, Result};

/// Minimum node count for any discretized surface.
pub const MIN_NODES: usize = 8;

/// Adjacent edge-length ratio above which a perturbed surface is resampled.
pub const RESAMPLE_TRIGGER: f64 = 1.5;

/// A discretized hypersurface: either a planar curve or a surface of
/// revolution described by its profile.
#[derive(Debug, Clone, PartialEq)]
pub enum Surface {
    Curve(DiscreteCurve),
    Profile(ProfileSurface),
}

impl Surface {
    pub fn local_geometry(&self) -> Result<LocalGeometry> {
        match self {
            Surface::Curve(c) => c.local_geometry(),
            Surface::Profile(p) => p.local_geometry(),
        }
    }

    /// Intrinsic dimension n of the hypersurface.
    pub fn dim(&self) -> usize {
        match self {
            Surface::Curve(_) => 1,
            Surface::Profile(_) => 2,
        }
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        match self {
            Surface::Curve(c) => c.points(),
            Surface::Profile(p) => p.profile(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes().is_empty()
    }

    /// True when the surface has no boundary and finite area.
    pub fn is_closed(&self) -> bool {
        match self {
            Surface::Curve(c) => c.is_closed(),
            Surface::Profile(p) => p.topology() != ProfileTopology::CylinderLike,
        }
    }

    pub fn ends(&self) -> [End; 2] {
        match self {
            Surface::Curve(c) => c.ends(),
            Surface::Profile(p) => p.ends(),
        }
    }

    /// Same topology and flags, new node positions. Skips the O(N²)
    /// embeddedness sweep; cheap invariants are still enforced.
    pub(crate) fn with_nodes(&self, nodes: Vec<[f64; 2]>) -> Result<Surface> {
        Ok(match self {
            Surface::Curve(c) => Surface::Curve(c.with_points(nodes)?),
            Surface::Profile(p) => Surface::Profile(p.with_profile(nodes)?),
        })
    }

    pub fn dilate(&self, alpha: f64) -> Result<Surface> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!("dilation factor must be positive, got {alpha}")));
        }
        self.with_nodes(self.nodes().iter().map(|p| [alpha * p[0], alpha * p[1]]).collect())
    }

    /// Translate by `v`. Surfaces of revolution only admit translations
    /// along the axis, so `v[0]` must vanish for profiles.
    pub fn translate(&self, v: [f64; 2]) -> Result<Surface> {
        if let Surface::Profile(_) = self {
            if v[0] != 0.0 {
                return Err(Error::Domain("surfaces of revolution can only be translated along the axis".into()));
            }
        }
        self.with_nodes(self.nodes().iter().map(|p| [p[0] + v[0], p[1] + v[1]]).collect())
    }

    /// Largest ratio between adjacent edge lengths.
    pub fn edge_ratio(&self) -> f64 {
        stencil::adjacent_edge_ratio(self.nodes(), self.ends())
    }

    pub fn resample(&self, policy: &ResamplePolicy) -> Result<Surface> {
        let nodes = resample::resample(self.nodes(), self.ends(), policy)?;
        self.with_nodes(nodes)
    }

    /// Resample to uniform arclength only when the edge ratio exceeds
    /// [`RESAMPLE_TRIGGER`].
    pub fn resample_if_needed(&self) -> Result<Surface> {
        if self.edge_ratio() > RESAMPLE_TRIGGER {
            self.resample(&ResamplePolicy::uniform(self.len()))
        } else {
            Ok(self.clone())
        }
    }

    /// Total n-dimensional measure.
    pub fn area(&self) -> Result<f64> {
        Ok(self.local_geometry()?.measure.iter().sum())
    }

    /// Centroid with respect to the surface measure, in model coordinates.
    pub fn centroid(&self) -> Result<[f64; 2]> {
        let g = self.local_geometry()?;
        let total: f64 = g.measure.iter().sum();
        let mut c = [0.0; 2];
        for (p, m) in g.position.iter().zip(&g.measure) {
            c[0] += p[0] * m;
            c[1] += p[1] * m;
        }
        if let Model::Axisymmetric = g.model {
            c[0] = 0.0;
        }
        Ok([c[0] / total, c[1] / total])
    }

    /// Diameter of the node set in the ambient space.
    pub fn diameter(&self) -> f64 {
        let nodes = self.nodes();
        let mut d2: f64 = 0.0;
        match self {
            Surface::Curve(_) => {
                for (i, a) in nodes.iter().enumerate() {
                    for b in &nodes[i + 1..] {
                        d2 = d2.max((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2));
                    }
                }
            }
            Surface::Profile(_) => {
                // the farthest pair on a surface of revolution lies in one
                // meridian plane, possibly on opposite sides of the axis
                for (i, a) in nodes.iter().enumerate() {
                    for b in &nodes[i..] {
                        d2 = d2.max((a[0] + b[0]).powi(2) + (a[1] - b[1]).powi(2));
                    }
                }
            }
        }
        d2.sqrt()
    }

    /// Axis-aligned bounding box (model coordinates) as `[min, max]`.
    pub fn bounding_box(&self) -> [[f64; 2]; 2] {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in self.nodes() {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        [lo, hi]
    }
}

impl From<DiscreteCurve> for Surface {
    fn from(c: DiscreteCurve) -> Self {
        Surface::Curve(c)
    }
}

impl From<ProfileSurface> for Surface {
    fn from(p: ProfileSurface) -> Self {
        Surface::Profile(p)
    }
}

#[inline]
pub(crate) fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = dot(ab, ab);
    let t = if len2 > 0.0 { (dot([p[0] - a[0], p[1] - a[1]], ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    norm([p[0] - a[0] - t * ab[0], p[1] - a[1] - t * ab[1]])
}

fn directed_hausdorff(a: &[[f64; 2]], b: &[[f64; 2]], b_closed: bool) -> f64 {
    let segs = if b_closed { b.len() } else { b.len() - 1 };
    a.iter()
        .map(|p| {
            (0..segs).map(|i| point_segment_distance(*p, b[i], b[(i + 1) % b.len()])).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two polygons (vertices of one to
/// edges of the other), in model coordinates.
pub fn hausdorff_distance(a: &Surface, b: &Surface) -> f64 {
    directed_hausdorff(a.nodes(), b.nodes(), b.ends()[0] == End::Periodic).max(directed_hausdorff(
        b.nodes(),
        a.nodes(),
        a.ends()[0] == End::Periodic,
    ))
}
