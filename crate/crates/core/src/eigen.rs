//! Cyclic Jacobi eigensolver for the small symmetric matrices the B² Bayes
//! estimator needs (K ≤ 16 in practice).

use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;
/// Convergence threshold on the off-diagonal Frobenius mass, relative to
/// max(1, ‖A‖_F).
pub const OFF_DIAGONAL_TOL: f64 = 1e-14;
/// Eigenvalues closer than this to the maximum are treated as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-10;
const NEGATIVE_TOL: f64 = 1e-12;

/// Full eigendecomposition; `vectors[i]` is the unit eigenvector for
/// `values[i]`. Order follows the Jacobi columns (unsorted).
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopEigenpair {
    pub value: f64,
    /// Unit norm, entrywise nonnegative.
    pub vector: Vec<f64>,
}

fn off_diagonal_mass(a: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[i * n + j] * a[i * n + j];
            }
        }
    }
    acc.sqrt()
}

/// Eigendecomposition of a symmetric row-major `dim × dim` matrix.
pub fn symmetric_eigen(matrix: &[f64], dim: usize) -> Result<SymmetricEigen> {
    let n = dim;
    if n == 0 || matrix.len() != n * n {
        return Err(Error::DimensionMismatch { left: n * n, right: matrix.len() });
    }
    if matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (matrix[i * n + j] - matrix[j * n + i]).abs() > SYMMETRY_TOL {
                return Err(Error::InvalidParameter(format!("matrix not symmetric at ({i}, {j})")));
            }
        }
    }

    let mut a = matrix.to_vec();
    // symmetrize exactly so rotations stay consistent
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = m;
            a[j * n + i] = m;
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_mass(&a, n);
        if off < OFF_DIAGONAL_TOL * scale {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::EigenNonConvergence { sweeps, off_diagonal: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let values = (0..n).map(|i| a[i * n + i]).collect();
    let vectors = (0..n).map(|j| (0..n).map(|i| v[i * n + j]).collect()).collect();
    Ok(SymmetricEigen { values, vectors, sweeps })
}

/// Flips the sign so the largest-magnitude entry is positive (lowest index
/// wins ties).
fn orient(mut x: Vec<f64>) -> Vec<f64> {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > x[best].abs() {
            best = i;
        }
    }
    if x[best] < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    x
}

/// Maximal eigenvalue and its nonnegative unit eigenvector of a symmetric,
/// entrywise nonnegative matrix.
///
/// Under degeneracy the candidate from the Jacobi basis with the largest
/// minimum entry is returned, ties going to the lowest index.
pub fn top_eigenpair(matrix: &[f64], dim: usize) -> Result<TopEigenpair> {
    if let Some(x) = matrix.iter().find(|x| **x < -NEGATIVE_TOL) {
        return Err(Error::InvalidParameter(format!("matrix entry {x} is negative")));
    }
    let eig = symmetric_eigen(matrix, dim)?;
    let top = eig.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut chosen: Option<(f64, Vec<f64>)> = None;
    for (value, vector) in eig.values.iter().zip(eig.vectors) {
        if top - value >= DEGENERACY_GAP {
            continue;
        }
        let vector = orient(vector);
        let score = vector.iter().copied().fold(f64::INFINITY, f64::min);
        match &chosen {
            Some((best, _)) if score <= best + DEGENERACY_GAP => {}
            _ => chosen = Some((score, vector)),
        }
    }
    let (_, mut vector) = chosen.expect("at least one eigenvalue attains the maximum");
    for x in vector.iter_mut() {
        if *x < 0.0 && *x > -NEGATIVE_TOL {
            *x = 0.0;
        }
    }
    Ok(TopEigenpair { value: top, vector })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn residual(m: &[f64], n: usize, value: f64, v: &[f64]) -> f64 {
        (0..n)
            .map(|i| {
                let mv: f64 = (0..n).map(|j| m[i * n + j] * v[j]).sum();
                (mv - value * v[i]).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn two_by_two_closed_form() {
        let (d, o) = (0.5, PI / 8.0);
        let m = [d, o, o, d];
        let top = top_eigenpair(&m, 2).unwrap();
        assert!((top.value - (d + o)).abs() < 1e-15);
        let r = 0.5f64.sqrt();
        assert!((top.vector[0] - r).abs() < 1e-15 && (top.vector[1] - r).abs() < 1e-15);
    }

    #[test]
    fn degenerate_identity_is_deterministic() {
        let m = [0.5, 0.0, 0.0, 0.5];
        let top = top_eigenpair(&m, 2).unwrap();
        assert_eq!(top.value, 0.5);
        assert_eq!(top.vector, vec![1.0, 0.0]);
        assert_eq!(top_eigenpair(&m, 2).unwrap(), top);
    }

    #[test]
    fn rank_one_projector() {
        let p = [0.1, 0.2, 0.3, 0.4];
        let s: Vec<f64> = p.iter().map(|x: &f64| x.sqrt()).collect();
        let m: Vec<f64> = (0..16).map(|k| s[k / 4] * s[k % 4]).collect();
        let top = top_eigenpair(&m, 4).unwrap();
        assert!((top.value - 1.0).abs() < 1e-14);
        for (a, b) in top.vector.iter().zip(&s) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn reducible_matrix_picks_nonnegative_basis_vector() {
        // two decoupled blocks with the same top eigenvalue
        let m = [
            0.25, 0.25, 0.0, 0.0, //
            0.25, 0.25, 0.0, 0.0, //
            0.0, 0.0, 0.25, 0.25, //
            0.0, 0.0, 0.25, 0.25,
        ];
        let top = top_eigenpair(&m, 4).unwrap();
        assert!((top.value - 0.5).abs() < 1e-15);
        assert!(top.vector.iter().all(|x| *x >= 0.0));
        assert!(residual(&m, 4, top.value, &top.vector) < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(top_eigenpair(&[1.0, 0.2, 0.3, 1.0], 2).is_err());
        assert!(top_eigenpair(&[1.0, -0.2, -0.2, 1.0], 2).is_err());
        assert!(top_eigenpair(&[1.0, 0.0, 0.0], 2).is_err());
        assert!(top_eigenpair(&[f64::NAN, 0.0, 0.0, 1.0], 2).is_err());
    }

    #[test]
    fn full_decomposition_reconstructs() {
        let m = [4.0, 1.0, 0.5, 1.0, 3.0, 0.25, 0.5, 0.25, 2.0];
        let eig = symmetric_eigen(&m, 3).unwrap();
        for (val, vec) in eig.values.iter().zip(&eig.vectors) {
            assert!(residual(&m, 3, *val, vec) < 1e-13);
        }
        let tr: f64 = eig.values.iter().sum();
        assert!((tr - 9.0).abs() < 1e-13);
    }
}
