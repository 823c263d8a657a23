//! One-dimensional golden-section search and a Nelder–Mead simplex
//! minimizer.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes `f` on `[lo, hi]` until the bracket is narrower than `tol`.
/// Returns `(argmax, max)`. Assumes `f` is unimodal on the bracket; otherwise
/// returns some local maximum.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    // the midpoint is not guaranteed to beat the last probes
    [(mid, fm), (c, fc), (d, fd)].into_iter().fold((mid, fm), |best, cand| if cand.1 > best.1 { cand } else { best })
}

/// Minimizes `f` on `[lo, hi]`; see [`golden_section_max`].
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (x, v) = golden_section_max(|x| -f(x), lo, hi, tol);
    (x, -v)
}

/// Nelder–Mead settings. Uses the dimension-adaptive coefficients of
/// Gao & Han, which behave better than the classic ones above a handful of
/// dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    /// Edge length of the initial simplex around the start point.
    pub initial_step: f64,
    /// Stop once every vertex lies within this distance of the best one.
    pub diameter_tol: f64,
    pub max_evals: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead { initial_step: 0.5, diameter_tol: 1e-6, max_evals: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    /// False when the evaluation budget ran out first.
    pub converged: bool,
}

impl NelderMead {
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, x0: &[f64]) -> Result<NelderMeadResult> {
        let n = x0.len();
        if n == 0 {
            let value = f(x0);
            return Ok(NelderMeadResult { x: vec![], value, evals: 1, converged: true });
        }
        let nf = n as f64;
        let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
        let mut evals = 0usize;
        let mut eval = |x: &[f64], evals: &mut usize| -> Result<f64> {
            *evals += 1;
            let v = f(x);
            if v.is_nan() {
                return Err(Error::Optimizer(format!("objective is NaN at {x:?}")));
            }
            Ok(v)
        };

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((x0.to_vec(), eval(x0, &mut evals)?));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += self.initial_step;
            let v = eval(&x, &mut evals)?;
            simplex.push((x, v));
        }

        let mut converged = false;
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = &simplex[0].0;
            let diameter = simplex[1..]
                .iter()
                .map(|(x, _)| x.iter().zip(best).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
                .fold(0.0, f64::max);
            if diameter < self.diameter_tol {
                converged = true;
                break;
            }
            if evals >= self.max_evals {
                break;
            }

            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / nf;
                }
            }
            let worst = simplex[n].clone();
            let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect() };

            let xr = along(alpha);
            let fr = eval(&xr, &mut evals)?;
            if fr < simplex[0].1 {
                let xe = along(alpha * gamma);
                let fe = eval(&xe, &mut evals)?;
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < worst.1 {
                let xc = along(alpha * rho);
                let fc = eval(&xc, &mut evals)?;
                (xc, fc)
            } else {
                let xc = along(-rho);
                let fc = eval(&xc, &mut evals)?;
                (xc, fc)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
                continue;
            }
            // shrink toward the best vertex
            let best = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let x: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, x)| b + sigma * (x - b)).collect();
                let v = eval(&x, &mut evals)?;
                *vertex = (x, v);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, value) = simplex.swap_remove(0);
        Ok(NelderMeadResult { x, value, evals, converged })
    }
}
