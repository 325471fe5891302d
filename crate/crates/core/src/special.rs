//! Special functions used by the closed-form reductions.
//!
//! `bessel_i0e` / `bessel_i1e` are the exponentially scaled modified Bessel
//! functions `e^{-c} I_ν(c)`. They appear when a Gaussian weight centred off
//! the rotation axis is averaged over the angle of a surface of revolution.

use std::f64::consts::PI;

const ASYMPTOTIC_SWITCH: f64 = 40.0;

/// `e^{-c} I_ν(c)` for ν ∈ {0, 1} and c ≥ 0.
fn scaled_bessel(nu: u32, c: f64) -> f64 {
    debug_assert!(c >= 0.0);
    if c < ASYMPTOTIC_SWITCH {
        // power series, all terms positive
        let half = 0.5 * c;
        let q = half * half;
        let mut term = if nu == 0 { 1.0 } else { half };
        let mut sum = term;
        let mut k = 1.0;
        loop {
            term *= q / (k * (k + nu as f64));
            sum += term;
            if term <= 1e-17 * sum {
                break;
            }
            k += 1.0;
        }
        sum * (-c).exp()
    } else {
        // Hankel expansion: sum_k (-1)^k a_k(ν) / c^k, truncated at the
        // smallest term.
        let mu = 4.0 * (nu * nu) as f64;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut last = f64::INFINITY;
        for k in 1..200 {
            let odd = (2 * k - 1) as f64;
            term *= -(mu - odd * odd) / (k as f64 * 8.0 * c);
            if term.abs() >= last || term.abs() < 1e-17 {
                break;
            }
            sum += term;
            last = term.abs();
        }
        sum / (2.0 * PI * c).sqrt()
    }
}

pub fn bessel_i0e(c: f64) -> f64 {
    scaled_bessel(0, c)
}

pub fn bessel_i1e(c: f64) -> f64 {
    scaled_bessel(1, c)
}

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

pub fn erfc(x: f64) -> f64 {
    statrs::function::erf::erfc(x)
}

/// Area of the unit sphere S^k ⊂ R^{k+1}.
pub fn unit_sphere_area(k: u32) -> f64 {
    let half = 0.5 * (k as f64 + 1.0);
    2.0 * PI.powf(half) / gamma(half)
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2, "Gauss-Legendre rule needs at least two nodes");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
