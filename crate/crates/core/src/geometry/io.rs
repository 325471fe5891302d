//! JSON records for discretized surfaces.
//!
//! ```json
//! {"schema": "shrinkerlab.surface/v1", "type": "profile",
//!  "topology": "torus_like", "nodes": [[r, z], ...], "flags": {...}}
//! ```

use serde::{Deserialize, Serialize};

use super::{DiscreteCurve, ProfileSurface, ProfileTopology, Surface};
use crate::error::{Error, Result};

pub const SURFACE_SCHEMA: &str = "shrinkerlab.surface/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Curve,
    Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceFlags {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub immersed: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<ProfileTopology>,
    pub orientation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRecord {
    pub schema: String,
    #[serde(rename = "type")]
    pub kind: SurfaceKind,
    pub nodes: Vec<[f64; 2]>,
    pub flags: SurfaceFlags,
}

impl SurfaceRecord {
    pub fn from_surface(s: &Surface) -> Self {
        match s {
            Surface::Curve(c) => SurfaceRecord {
                schema: SURFACE_SCHEMA.into(),
                kind: SurfaceKind::Curve,
                nodes: c.points().to_vec(),
                flags: SurfaceFlags {
                    closed: Some(c.is_closed()),
                    immersed: Some(c.is_immersed()),
                    topology: None,
                    orientation: c.orientation(),
                },
            },
            Surface::Profile(p) => SurfaceRecord {
                schema: SURFACE_SCHEMA.into(),
                kind: SurfaceKind::Profile,
                nodes: p.profile().to_vec(),
                flags: SurfaceFlags {
                    closed: None,
                    immersed: None,
                    topology: Some(p.topology()),
                    orientation: p.orientation(),
                },
            },
        }
    }

    pub fn into_surface(self) -> Result<Surface> {
        if self.schema != SURFACE_SCHEMA {
            return Err(Error::Serialization(format!("unknown schema {:?}, expected {SURFACE_SCHEMA:?}", self.schema)));
        }
        if self.flags.orientation.abs() != 1.0 {
            return Err(Error::Serialization("orientation must be +1 or -1".into()));
        }
        Ok(match self.kind {
            SurfaceKind::Curve => {
                let closed = self.flags.closed.unwrap_or(true);
                let immersed = self.flags.immersed.unwrap_or(false);
                if closed && !immersed {
                    if let Some((a, b)) = super::curve::first_intersection(&self.nodes) {
                        return Err(Error::SelfIntersection { first: a, second: b });
                    }
                }
                Surface::Curve(DiscreteCurve::with_flags(self.nodes, closed, immersed, self.flags.orientation)?)
            }
            SurfaceKind::Profile => {
                let topology = self
                    .flags
                    .topology
                    .ok_or_else(|| Error::Serialization("profile record without topology".into()))?;
                if topology == ProfileTopology::TorusLike {
                    if let Some((a, b)) = super::curve::first_intersection(&self.nodes) {
                        return Err(Error::SelfIntersection { first: a, second: b });
                    }
                }
                Surface::Profile(ProfileSurface::with_flags(self.nodes, topology, self.flags.orientation)?)
            }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("surface records always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
    }
}
