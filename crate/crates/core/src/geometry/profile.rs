use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::curve::{first_intersection, signed_area};
use super::local::{self, LocalGeometry, Model};
use super::resample::{self, ResamplePolicy};
use super::stencil::{self, End};
use super::MIN_NODES;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileTopology {
    /// Open profile with both ends on the axis.
    SphereLike,
    /// Simple closed loop in the half-plane `r > 0`.
    TorusLike,
    /// Open profile truncated away from the axis at both ends.
    CylinderLike,
}

/// Meridian `(r, z)` polygon of a surface of revolution about the z-axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSurface {
    profile: Vec<[f64; 2]>,
    topology: ProfileTopology,
    orientation: f64,
}

impl ProfileSurface {
    pub fn new(profile: Vec<[f64; 2]>, topology: ProfileTopology) -> Result<Self> {
        let profile = validate(profile, topology)?;
        if topology == ProfileTopology::TorusLike {
            if let Some((a, b)) = first_intersection(&profile) {
                return Err(Error::SelfIntersection { first: a, second: b });
            }
        }
        let orientation = orientation_of(&profile, topology);
        Ok(Self { profile, topology, orientation })
    }

    /// Round sphere of the given radius centred at the origin; nodes equally
    /// spaced in the polar angle from the north to the south pole.
    pub fn sphere(radius: f64, n: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Domain(format!("sphere radius must be positive, got {radius}")));
        }
        let profile = (0..n)
            .map(|i| {
                let phi = PI * i as f64 / (n - 1) as f64;
                [radius * phi.sin(), radius * phi.cos()]
            })
            .collect();
        Self::new(profile, ProfileTopology::SphereLike)
    }

    /// Round cylinder `r = radius`, `|z| ≤ half_length`.
    pub fn cylinder(radius: f64, half_length: f64, n: usize) -> Result<Self> {
        if !(radius > 0.0 && half_length > 0.0) {
            return Err(Error::Domain("cylinder radius and length must be positive".into()));
        }
        let profile = (0..n).map(|i| [radius, -half_length + 2.0 * half_length * i as f64 / (n - 1) as f64]).collect();
        Self::new(profile, ProfileTopology::CylinderLike)
    }

    /// Ellipsoid of revolution with equatorial radius `a` and polar
    /// semi-axis `c`, resampled to uniform arclength.
    pub fn ellipsoid(a: f64, c: f64, n: usize) -> Result<Self> {
        if !(a > 0.0 && c > 0.0) {
            return Err(Error::Domain("ellipsoid semi-axes must be positive".into()));
        }
        let fine = 32 * n;
        let dense: Vec<[f64; 2]> = (0..fine)
            .map(|i| {
                let phi = PI * i as f64 / (fine - 1) as f64;
                [a * phi.sin(), c * phi.cos()]
            })
            .collect();
        let mut nodes = resample::resample(&dense, [End::Pole; 2], &ResamplePolicy::uniform(n))?;
        nodes[0][0] = 0.0;
        nodes[n - 1][0] = 0.0;
        Self::new(nodes, ProfileTopology::SphereLike)
    }

    /// Two round spheres of radius `bulb` joined by a straight neck of radius
    /// `neck` and length `neck_length`, with concave circular fillets of
    /// radius `neck` where the neck meets the bulbs. `n` sets the spacing on
    /// the bulbs; the neck and fillets are refined.
    pub fn dumbbell(bulb: f64, neck: f64, neck_length: f64, n: usize) -> Result<Self> {
        if !(bulb > 0.0 && neck > 0.0 && neck < bulb && neck_length > 0.0) {
            return Err(Error::Domain("dumbbell needs 0 < neck < bulb and a positive neck length".into()));
        }
        let (b, a, f) = (bulb, neck, neck);
        let zf = 0.5 * neck_length;
        let c = zf + ((b + f).powi(2) - (a + f).powi(2)).sqrt();
        // unit vector from the bulb centre to the fillet centre
        let u = [(a + f) / (b + f), (zf - c) / (b + f)];
        let phi_t = u[0].atan2(u[1]);
        let alpha0 = (-u[1]).atan2(-u[0]);
        let arc_sphere = b * phi_t;
        let arc_fillet = f * (PI - alpha0);
        let total = arc_sphere + arc_fillet + zf;
        let step = total / (64 * n) as f64;
        let mut upper: Vec<[f64; 2]> = Vec::new();
        let pieces = |len: f64| ((len / step).ceil() as usize).max(2);
        let m = pieces(arc_sphere);
        for i in 0..m {
            let phi = phi_t * i as f64 / m as f64;
            upper.push([b * phi.sin(), c + b * phi.cos()]);
        }
        let m = pieces(arc_fillet);
        for i in 0..m {
            let al = alpha0 + (PI - alpha0) * i as f64 / m as f64;
            upper.push([a + f + f * al.cos(), zf + f * al.sin()]);
        }
        let m = pieces(zf);
        for i in 0..m {
            upper.push([a, zf * (1.0 - i as f64 / m as f64)]);
        }
        upper[0][0] = 0.0;
        let mut dense = upper.clone();
        dense.push([a, 0.0]);
        dense.extend(upper.iter().rev().map(|p| [p[0], -p[1]]));
        let dense = Self::new(dense, ProfileTopology::SphereLike)?;
        let g = dense.local_geometry()?;
        let length: f64 = g.edges.iter().map(|e| e.length).sum();
        let spacing: Vec<f64> =
            g.a_squared.iter().map(|a2| (length / n as f64).min(0.15 / a2.sqrt().max(1e-12))).collect();
        let policy = ResamplePolicy::Graded { spacing, grading: 0.05, max_count: 16 * n };
        let mut nodes = resample::resample(dense.profile(), [End::Pole; 2], &policy)?;
        let last = nodes.len() - 1;
        nodes[0][0] = 0.0;
        nodes[last][0] = 0.0;
        Self::new(nodes, ProfileTopology::SphereLike)
    }

    pub fn profile(&self) -> &[[f64; 2]] {
        &self.profile
    }

    pub fn topology(&self) -> ProfileTopology {
        self.topology
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn ends(&self) -> [End; 2] {
        match self.topology {
            ProfileTopology::SphereLike => [End::Pole; 2],
            ProfileTopology::TorusLike => [End::Periodic; 2],
            ProfileTopology::CylinderLike => [End::Free; 2],
        }
    }

    pub(crate) fn with_profile(&self, profile: Vec<[f64; 2]>) -> Result<Self> {
        let profile = validate(profile, self.topology)?;
        Ok(Self { profile, ..self.clone() })
    }

    pub(crate) fn with_flags(profile: Vec<[f64; 2]>, topology: ProfileTopology, orientation: f64) -> Result<Self> {
        let profile = validate(profile, topology)?;
        Ok(Self { profile, topology, orientation })
    }

    pub fn local_geometry(&self) -> Result<LocalGeometry> {
        local::compute(Model::Axisymmetric, &self.profile, self.ends(), self.orientation)
    }

    /// Smallest distance of the profile to the axis (excluding poles).
    pub fn min_radius(&self) -> f64 {
        let n = self.profile.len();
        let range = match self.topology {
            ProfileTopology::SphereLike => 1..n - 1,
            _ => 0..n,
        };
        self.profile[range].iter().map(|p| p[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn max_radius(&self) -> f64 {
        self.profile.iter().map(|p| p[0]).fold(0.0, f64::max)
    }
}

fn validate(mut profile: Vec<[f64; 2]>, topology: ProfileTopology) -> Result<Vec<[f64; 2]>> {
    let n = profile.len();
    if n < MIN_NODES {
        return Err(Error::TooFewNodes { min: MIN_NODES, got: n });
    }
    if profile.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::InvalidProfile("non-finite node".into()));
    }
    let scale = profile.iter().map(|p| p[0].abs().max(p[1].abs())).fold(0.0, f64::max);
    match topology {
        ProfileTopology::SphereLike => {
            for &i in &[0, n - 1] {
                if profile[i][0].abs() > 1e-9 * scale {
                    return Err(Error::Pole(i));
                }
                profile[i][0] = 0.0;
            }
            if let Some(i) = (1..n - 1).find(|&i| !(profile[i][0] > 0.0)) {
                return Err(Error::InvalidProfile(format!("r must be positive away from the poles (node {i})")));
            }
        }
        ProfileTopology::TorusLike | ProfileTopology::CylinderLike => {
            if let Some(i) = (0..n).find(|&i| !(profile[i][0] > 0.0)) {
                return Err(Error::InvalidProfile(format!("r must be positive (node {i})")));
            }
        }
    }
    let ends = match topology {
        ProfileTopology::SphereLike => [End::Pole; 2],
        ProfileTopology::TorusLike => [End::Periodic; 2],
        ProfileTopology::CylinderLike => [End::Free; 2],
    };
    for (i, j) in stencil::edge_pairs(n, ends) {
        if stencil::chord(profile[i], profile[j]) == 0.0 {
            return Err(Error::DegenerateEdge { index: i, next: j });
        }
    }
    Ok(profile)
}

fn orientation_of(profile: &[[f64; 2]], topology: ProfileTopology) -> f64 {
    match topology {
        // the closing edge of a sphere-like profile runs along the axis and
        // contributes nothing to the shoelace sum
        ProfileTopology::SphereLike | ProfileTopology::TorusLike => signed_area(profile).signum(),
        ProfileTopology::CylinderLike => (profile[profile.len() - 1][1] - profile[0][1]).signum(),
    }
}
