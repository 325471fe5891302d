use std::f64::consts::PI;

use super::local::{self, LocalGeometry, Model};
use super::resample::{self, ResamplePolicy};
use super::stencil::{self, End};
use super::MIN_NODES;
use crate::error::{Error, Result};

/// A polygonal curve in the plane.
///
/// Closed curves carry the outward normal (orientation fixed from the sign
/// of the enclosed signed area). Open curves carry an explicit orientation:
/// `+1` means the normal is the tangent rotated clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCurve {
    points: Vec<[f64; 2]>,
    closed: bool,
    immersed: bool,
    orientation: f64,
}

impl DiscreteCurve {
    /// A simple closed polygon. Self-intersections are rejected.
    pub fn closed(points: Vec<[f64; 2]>) -> Result<Self> {
        validate_nodes(&points, true)?;
        if let Some((a, b)) = first_intersection(&points) {
            return Err(Error::SelfIntersection { first: a, second: b });
        }
        let orientation = signed_area(&points).signum();
        Ok(Self { points, closed: true, immersed: false, orientation })
    }

    /// A closed polygon that may cross itself (Abresch–Langer curves).
    pub fn closed_immersed(points: Vec<[f64; 2]>) -> Result<Self> {
        validate_nodes(&points, true)?;
        let a = signed_area(&points);
        let orientation = if a == 0.0 { 1.0 } else { a.signum() };
        Ok(Self { points, closed: true, immersed: true, orientation })
    }

    pub fn open(points: Vec<[f64; 2]>, orientation: f64) -> Result<Self> {
        validate_nodes(&points, false)?;
        if orientation.abs() != 1.0 {
            return Err(Error::Domain("orientation must be +1 or -1".into()));
        }
        Ok(Self { points, closed: false, immersed: false, orientation })
    }

    /// Round circle with `n` equally spaced nodes.
    pub fn circle(radius: f64, n: usize) -> Result<Self> {
        Self::circle_at([0.0, 0.0], radius, n)
    }

    pub fn circle_at(center: [f64; 2], radius: f64, n: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Domain(format!("circle radius must be positive, got {radius}")));
        }
        let points = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            })
            .collect();
        Self::closed(points)
    }

    /// Ellipse with semi-axes `a`, `b`, resampled to uniform arclength.
    pub fn ellipse(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Domain("ellipse semi-axes must be positive".into()));
        }
        let fine = 32 * n;
        let dense: Vec<[f64; 2]> = (0..fine)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / fine as f64;
                [a * t.cos(), b * t.sin()]
            })
            .collect();
        let nodes = resample::resample(&dense, [End::Periodic; 2], &ResamplePolicy::uniform(n))?;
        Self::closed(nodes)
    }

    /// Straight segment through `offset` with direction angle `angle`,
    /// `n` nodes on `[-half_length, half_length]`.
    pub fn line(angle: f64, offset: [f64; 2], half_length: f64, n: usize) -> Result<Self> {
        let d = [angle.cos(), angle.sin()];
        let points = (0..n)
            .map(|i| {
                let s = -half_length + 2.0 * half_length * i as f64 / (n - 1) as f64;
                [offset[0] + s * d[0], offset[1] + s * d[1]]
            })
            .collect();
        Self::open(points, 1.0)
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn is_immersed(&self) -> bool {
        self.immersed
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn ends(&self) -> [End; 2] {
        if self.closed {
            [End::Periodic; 2]
        } else {
            [End::Free; 2]
        }
    }

    pub(crate) fn with_points(&self, points: Vec<[f64; 2]>) -> Result<Self> {
        validate_nodes(&points, self.closed)?;
        Ok(Self { points, ..self.clone() })
    }

    pub(crate) fn with_flags(points: Vec<[f64; 2]>, closed: bool, immersed: bool, orientation: f64) -> Result<Self> {
        validate_nodes(&points, closed)?;
        Ok(Self { points, closed, immersed, orientation })
    }

    pub fn local_geometry(&self) -> Result<LocalGeometry> {
        local::compute(Model::Planar, &self.points, self.ends(), self.orientation)
    }

    /// Signed enclosed area (shoelace); positive for counter-clockwise
    /// traversal. Only meaningful for closed curves.
    pub fn signed_area(&self) -> f64 {
        signed_area(&self.points)
    }

    /// Polygon length.
    pub fn length(&self) -> f64 {
        stencil::edge_pairs(self.points.len(), self.ends())
            .into_iter()
            .map(|(i, j)| stencil::chord(self.points[i], self.points[j]))
            .sum()
    }

    /// `L² / (4π A)` for closed curves; 1 exactly for circles.
    pub fn isoperimetric_ratio(&self) -> f64 {
        let l = self.length();
        l * l / (4.0 * PI * self.signed_area().abs())
    }

    /// Index pair of the first crossing edges, if any.
    pub fn self_intersection(&self) -> Option<(usize, usize)> {
        if self.closed {
            first_intersection(&self.points)
        } else {
            None
        }
    }
}

fn validate_nodes(points: &[[f64; 2]], closed: bool) -> Result<()> {
    if points.len() < MIN_NODES {
        return Err(Error::TooFewNodes { min: MIN_NODES, got: points.len() });
    }
    if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::Domain("non-finite node coordinate".into()));
    }
    let ends = if closed { [End::Periodic; 2] } else { [End::Free; 2] };
    for (i, j) in stencil::edge_pairs(points.len(), ends) {
        if stencil::chord(points[i], points[j]) == 0.0 {
            return Err(Error::DegenerateEdge { index: i, next: j });
        }
    }
    Ok(())
}

pub(crate) fn signed_area(points: &[[f64; 2]]) -> f64 {
    let n = points.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (points[i], points[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
}

fn segments_cross(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let orient = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

/// Sweep over edges sorted by their left x-coordinate; only edges whose
/// x-ranges overlap are tested.
pub(crate) fn first_intersection(points: &[[f64; 2]]) -> Option<(usize, usize)> {
    let n = points.len();
    let mut order: Vec<usize> = (0..n).collect();
    let xmin = |e: usize| points[e][0].min(points[(e + 1) % n][0]);
    let xmax = |e: usize| points[e][0].max(points[(e + 1) % n][0]);
    order.sort_by(|&a, &b| xmin(a).total_cmp(&xmin(b)));
    let mut active: Vec<usize> = Vec::new();
    let mut best: Option<(usize, usize)> = None;
    for &e in &order {
        let x = xmin(e);
        active.retain(|&a| xmax(a) >= x);
        for &a in &active {
            let adjacent = (a + 1) % n == e || (e + 1) % n == a;
            if adjacent {
                continue;
            }
            if segments_cross(points[a], points[(a + 1) % n], points[e], points[(e + 1) % n]) {
                let pair = (a.min(e), a.max(e));
                best = Some(best.map_or(pair, |b| b.min(pair)));
            }
        }
        active.push(e);
    }
    best
}
