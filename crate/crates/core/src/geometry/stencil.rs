//! Ghost-node extension and index-parameter difference stencils.

use serde::{Deserialize, Serialize};

/// How a node sequence continues past one of its ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum End {
    /// Closed polygon; indices wrap around.
    Periodic,
    /// Profile meets the rotation axis; the meridian continues as its mirror
    /// image `(r, z) -> (-r, z)`.
    Pole,
    /// Truncated end; continued by point reflection through the end node.
    Free,
}

fn mirror_index(n: usize, ends: [End; 2], i: isize) -> (usize, Option<End>) {
    let n = n as isize;
    if i < 0 {
        match ends[0] {
            End::Periodic => ((i.rem_euclid(n)) as usize, None),
            e => ((-i) as usize, Some(e)),
        }
    } else if i >= n {
        match ends[1] {
            End::Periodic => ((i.rem_euclid(n)) as usize, None),
            e => ((2 * (n - 1) - i) as usize, Some(e)),
        }
    } else {
        (i as usize, None)
    }
}

pub(crate) fn point(nodes: &[[f64; 2]], ends: [End; 2], i: isize) -> [f64; 2] {
    let (j, kind) = mirror_index(nodes.len(), ends, i);
    let p = nodes[j];
    match kind {
        None => p,
        Some(End::Pole) => [-p[0], p[1]],
        Some(End::Free) => {
            let e = if i < 0 { nodes[0] } else { nodes[nodes.len() - 1] };
            [2.0 * e[0] - p[0], 2.0 * e[1] - p[1]]
        }
        Some(End::Periodic) => unreachable!(),
    }
}

/// Axially symmetric scalar fields are even across a pole.
pub(crate) fn scalar(values: &[f64], ends: [End; 2], i: isize) -> f64 {
    let (j, kind) = mirror_index(values.len(), ends, i);
    let v = values[j];
    match kind {
        None => v,
        Some(End::Pole) => v,
        Some(End::Free) => {
            let e = if i < 0 { values[0] } else { values[values.len() - 1] };
            2.0 * e - v
        }
        Some(End::Periodic) => unreachable!(),
    }
}

/// Fourth-order central first derivative with respect to the node index.
pub(crate) fn d1<F: Fn(isize) -> f64>(f: F, i: isize) -> f64 {
    (-f(i + 2) + 8.0 * f(i + 1) - 8.0 * f(i - 1) + f(i - 2)) / 12.0
}

/// Fourth-order central second derivative with respect to the node index.
pub(crate) fn d2<F: Fn(isize) -> f64>(f: F, i: isize) -> f64 {
    (-f(i + 2) + 16.0 * f(i + 1) - 30.0 * f(i) + 16.0 * f(i - 1) - f(i - 2)) / 12.0
}

/// Index pairs of the polygon edges.
pub(crate) fn edge_pairs(n: usize, ends: [End; 2]) -> Vec<(usize, usize)> {
    if ends[0] == End::Periodic {
        (0..n).map(|i| (i, (i + 1) % n)).collect()
    } else {
        (0..n - 1).map(|i| (i, i + 1)).collect()
    }
}

pub(crate) fn chord(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

pub(crate) fn adjacent_edge_ratio(nodes: &[[f64; 2]], ends: [End; 2]) -> f64 {
    let lens: Vec<f64> = edge_pairs(nodes.len(), ends).into_iter().map(|(i, j)| chord(nodes[i], nodes[j])).collect();
    let m = lens.len();
    let pairs = if ends[0] == End::Periodic { m } else { m - 1 };
    (0..pairs)
        .map(|k| {
            let (a, b) = (lens[k], lens[(k + 1) % m]);
            a.max(b) / a.min(b)
        })
        .fold(1.0, f64::max)
}
