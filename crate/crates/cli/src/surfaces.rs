//! Named test surfaces built from config keys.

use std::f64::consts::SQRT_2;
use std::path::Path;

use shrinker_core::geometry::SurfaceRecord;
use shrinker_core::shrinker::{self, TorusConfig};
use shrinker_core::spectral::{assemble_l, eigen};
use shrinker_core::{DiscreteCurve, ProfileSurface, Surface};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const NAMES: &[&str] =
    &["circle", "ellipse", "line", "sphere", "ellipsoid", "cylinder", "dumbbell", "torus", "torus_seed", "file"];

/// Keys read by [`build`], depending on the surface.
pub const KEYS: &[&str] = &[
    "surface",
    "nodes",
    "radius",
    "a",
    "b",
    "c",
    "angle",
    "half_length",
    "bulb",
    "neck",
    "neck_length",
    "seed_amplitude",
    "input",
];

/// The shrinker library at a given resolution: circle and line of radius
/// √2, sphere of radius 2, cylinder of radius √2.
pub fn shrinker(name: &str, nodes: usize) -> CliResult<Surface> {
    Ok(match name {
        "circle" => DiscreteCurve::circle(SQRT_2, nodes)?.into(),
        "line" => DiscreteCurve::line(0.0, [0.0, 0.0], 14.0, nodes)?.into(),
        "sphere" => ProfileSurface::sphere(2.0, nodes)?.into(),
        "cylinder" => ProfileSurface::cylinder(SQRT_2, 12.0, nodes)?.into(),
        other => return Err(CliError::Usage(format!("no built-in shrinker named {other:?}"))),
    })
}

pub fn build(cfg: &RunConfig, default: &str) -> CliResult<(String, Surface)> {
    let name = cfg.string("surface", default);
    let default_nodes = match name.as_str() {
        "circle" | "ellipse" => 256,
        "line" | "sphere" | "ellipsoid" => 257,
        "cylinder" => 481,
        "dumbbell" => 200,
        _ => 512,
    };
    let nodes = if name == "file" { 0 } else { cfg.get("nodes", default_nodes)? };
    let surface: Surface = match name.as_str() {
        "circle" => DiscreteCurve::circle(cfg.get("radius", SQRT_2)?, nodes)?.into(),
        "ellipse" => DiscreteCurve::ellipse(cfg.get("a", 2.0)?, cfg.get("b", 1.0)?, nodes)?.into(),
        "line" => DiscreteCurve::line(cfg.get("angle", 0.0)?, [0.0, 0.0], cfg.get("half_length", 14.0)?, nodes)?.into(),
        "sphere" => ProfileSurface::sphere(cfg.get("radius", 2.0)?, nodes)?.into(),
        "ellipsoid" => ProfileSurface::ellipsoid(cfg.get("a", 1.0)?, cfg.get("c", 1.6)?, nodes)?.into(),
        "cylinder" => {
            ProfileSurface::cylinder(cfg.get("radius", SQRT_2)?, cfg.get("half_length", 12.0)?, nodes)?.into()
        }
        "dumbbell" => {
            ProfileSurface::dumbbell(cfg.get("bulb", 1.5)?, cfg.get("neck", 0.2)?, cfg.get("neck_length", 1.0)?, nodes)?
                .into()
        }
        "torus" => torus(nodes)?,
        "torus_seed" => {
            // the torus pushed along its lowest eigenfunction of L
            let base = torus(nodes)?;
            let mut spectrum = eigen(&assemble_l(&base)?, 1)?;
            base.normal_graph(&spectrum.eigenfunctions.remove(0), cfg.get("seed_amplitude", 1e-3)?)?
        }
        "file" => {
            let path = cfg.string("input", "");
            if path.is_empty() {
                return Err(CliError::Usage("surface = file needs an input path".into()));
            }
            read_surface(Path::new(&path))?
        }
        other => {
            return Err(CliError::Usage(format!("unknown surface {other:?} (expected one of {})", NAMES.join(", "))))
        }
    };
    Ok((name, surface))
}

pub fn torus(nodes: usize) -> CliResult<Surface> {
    Ok(shrinker::solve_angenent_torus(&TorusConfig { nodes, ..TorusConfig::outer() })?.surface.into())
}

pub fn read_surface(path: &Path) -> CliResult<Surface> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read surface {}: {e}", path.display())))?;
    let bad = |e: shrinker_core::Error| CliError::Usage(format!("bad surface file {}: {e}", path.display()));
    SurfaceRecord::from_json(&text).and_then(SurfaceRecord::into_surface).map_err(bad)
}
