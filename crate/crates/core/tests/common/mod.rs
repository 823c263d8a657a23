#![allow(dead_code)]

use std::f64::consts::PI;

use statrs::function::beta::ln_beta;

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// E[f(p)] for p ~ Beta(a, b), with p = sin²θ so that half-integer and
/// integer parameters give a smooth integrand.
pub fn beta_expectation(a: f64, b: f64, nodes: usize, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre(nodes);
    let half = PI / 4.0;
    let lb = ln_beta(a, b);
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| {
            let theta = half * (xi + 1.0);
            let (s, c) = theta.sin_cos();
            let dens = ((2.0 * a - 1.0) * s.ln() + (2.0 * b - 1.0) * c.ln() - lb).exp() * 2.0;
            wi * half * dens * f(s * s)
        })
        .sum()
}
