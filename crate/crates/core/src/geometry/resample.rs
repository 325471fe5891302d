//! Arclength resampling with local cubic interpolation.

use super::stencil::{self, End};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ResamplePolicy {
    /// `count` nodes at equal arclength spacing.
    Uniform { count: usize },
    /// Spacing prescribed at each current node, smoothed so that it grows
    /// by at most a factor `1 + grading` per node.
    Graded { spacing: Vec<f64>, grading: f64, max_count: usize },
}

impl ResamplePolicy {
    pub fn uniform(count: usize) -> Self {
        ResamplePolicy::Uniform { count }
    }
}

/// Cumulative chord-length parameter (length n, or n + 1 for periodic
/// curves where the last entry closes the loop).
fn chord_params(nodes: &[[f64; 2]], ends: [End; 2]) -> Vec<f64> {
    let mut t = vec![0.0];
    for (i, j) in stencil::edge_pairs(nodes.len(), ends) {
        let last = *t.last().unwrap();
        t.push(last + stencil::chord(nodes[i], nodes[j]));
    }
    t
}

struct Interpolant<'a> {
    nodes: &'a [[f64; 2]],
    ends: [End; 2],
    t: Vec<f64>,
}

impl Interpolant<'_> {
    fn total(&self) -> f64 {
        *self.t.last().unwrap()
    }

    fn param(&self, i: isize) -> f64 {
        let n = self.nodes.len() as isize;
        let total = self.total();
        if self.ends[0] == End::Periodic {
            let k = i.div_euclid(n);
            self.t[i.rem_euclid(n) as usize] + k as f64 * total
        } else if i < 0 {
            -self.t[(-i) as usize]
        } else if i >= n {
            2.0 * self.t[(n - 1) as usize] - self.t[(2 * (n - 1) - i) as usize]
        } else {
            self.t[i as usize]
        }
    }

    fn eval(&self, tau: f64) -> [f64; 2] {
        let segments = self.t.len() - 1;
        // segment index with t[i] <= tau < t[i + 1]
        let i = match self.t.binary_search_by(|v| v.total_cmp(&tau)) {
            Ok(k) => k.min(segments - 1),
            Err(k) => k.saturating_sub(1).min(segments - 1),
        } as isize;
        let idx = [i - 1, i, i + 1, i + 2];
        let ts: Vec<f64> = idx.iter().map(|&k| self.param(k)).collect();
        let ps: Vec<[f64; 2]> = idx.iter().map(|&k| stencil::point(self.nodes, self.ends, k)).collect();
        let mut out = [0.0; 2];
        for a in 0..4 {
            let mut w = 1.0;
            for b in 0..4 {
                if a != b {
                    w *= (tau - ts[b]) / (ts[a] - ts[b]);
                }
            }
            out[0] += w * ps[a][0];
            out[1] += w * ps[a][1];
        }
        out
    }
}

pub(crate) fn resample(nodes: &[[f64; 2]], ends: [End; 2], policy: &ResamplePolicy) -> Result<Vec<[f64; 2]>> {
    let n = nodes.len();
    if n < 4 {
        return Err(Error::TooFewNodes { min: 4, got: n });
    }
    let periodic = ends[0] == End::Periodic;
    let interp = Interpolant { nodes, ends, t: chord_params(nodes, ends) };
    let total = interp.total();
    let taus: Vec<f64> = match policy {
        ResamplePolicy::Uniform { count } => {
            let count = *count;
            if count < 4 {
                return Err(Error::TooFewNodes { min: 4, got: count });
            }
            if periodic {
                (0..count).map(|j| total * j as f64 / count as f64).collect()
            } else {
                (0..count).map(|j| total * j as f64 / (count - 1) as f64).collect()
            }
        }
        ResamplePolicy::Graded { spacing, grading, max_count } => {
            if spacing.len() != n || spacing.iter().any(|h| !(*h > 0.0)) {
                return Err(Error::Domain("graded resampling needs a positive spacing per node".into()));
            }
            graded_params(&interp, spacing, *grading, *max_count, periodic)
        }
    };
    let mut out: Vec<[f64; 2]> = taus.iter().map(|&tau| interp.eval(tau)).collect();
    // the end nodes are kept exactly
    if !periodic {
        out[0] = nodes[0];
        let last = out.len() - 1;
        out[last] = nodes[n - 1];
    }
    Ok(out)
}

fn graded_params(interp: &Interpolant, spacing: &[f64], grading: f64, max_count: usize, periodic: bool) -> Vec<f64> {
    let n = spacing.len();
    let t = &interp.t;
    let mut h = spacing.to_vec();
    let gap = |i: usize, j: usize| -> f64 {
        if j == 0 && i == n - 1 {
            interp.total() - t[n - 1]
        } else {
            (t[j] - t[i]).abs()
        }
    };
    // Lipschitz smoothing h(t) <= h(t') + grading |t - t'|
    let passes = if periodic { 2 } else { 1 };
    for _ in 0..passes {
        for k in 1..=n {
            let (i, j) = (k - 1, k % n);
            if j == 0 && !periodic {
                break;
            }
            h[j] = h[j].min(h[i] + grading * gap(i, j));
        }
        for k in (0..n).rev() {
            let (i, j) = (k, (k + 1) % n);
            if j == 0 && !periodic {
                continue;
            }
            h[i] = h[i].min(h[j] + grading * gap(i, j));
        }
    }
    // u(t) = ∫ dt / h, inverted at equal steps
    let segments = t.len() - 1;
    // h is linear in t on each segment, so u is logarithmic there and is
    // inverted exactly
    let ends_h = |k: usize| (h[k], h[(k + 1) % n]);
    let flat = |a: f64, b: f64| (a - b).abs() < 1e-12 * a;
    let mut u = vec![0.0; segments + 1];
    for k in 0..segments {
        let (a, b) = ends_h(k);
        let dt = t[k + 1] - t[k];
        u[k + 1] = u[k] + if flat(a, b) { dt / a } else { dt * (b / a).ln() / (b - a) };
    }
    let total_u = u[segments];
    let mut count = total_u.round().max(8.0) as usize;
    if !periodic {
        count = count.max(8);
    }
    count = count.min(max_count);
    let steps = if periodic { count } else { count - 1 };
    (0..count)
        .map(|j| {
            let target = total_u * j as f64 / steps as f64;
            let k = match u.binary_search_by(|v| v.total_cmp(&target)) {
                Ok(k) => k.min(segments - 1),
                Err(k) => k.saturating_sub(1).min(segments - 1),
            };
            let (a, b) = ends_h(k);
            let dt = t[k + 1] - t[k];
            let du = (target - u[k]).max(0.0);
            let tau = if flat(a, b) { du * a } else { a * ((du * (b - a) / dt).exp() - 1.0) * dt / (b - a) };
            t[k] + tau.min(dt)
        })
        .collect()
}
