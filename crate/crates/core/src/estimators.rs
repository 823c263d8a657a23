//! Point estimators: the Bayes estimators for 1 − B and 1 − B², the
//! posterior mean and the binomial MLE.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::eigen::top_eigenpair;
use crate::error::{Error, Result};
use crate::posterior::{posterior_update, PosteriorMoments};
use crate::simplex::{LossKind, ProbVector};

/// Bayes estimator for 1 − B: normalize E[√p] to a unit vector and square
/// it element-wise.
pub fn bayes_b1<P: PosteriorMoments + ?Sized>(post: &P) -> Result<ProbVector> {
    let m = post.sqrt_moment_vector();
    if m.iter().all(|x| *x == 0.0) {
        return Err(Error::InvalidParameter("E[sqrt p] is the zero vector".into()));
    }
    ProbVector::from_sqrt_direction(&m)
}

/// Bayes estimator for 1 − B²: the element-wise square of the top
/// eigenvector of E[√(p_i p_j)].
pub fn bayes_b2<P: PosteriorMoments + ?Sized>(post: &P) -> Result<ProbVector> {
    let m = post.moment_matrix();
    let top = top_eigenpair(m.as_slice(), m.dim())?;
    ProbVector::from_sqrt_direction(&top.vector)
}

/// The Bayes estimator matching `loss`.
pub fn bayes_estimate<P: PosteriorMoments + ?Sized>(post: &P, loss: LossKind) -> Result<ProbVector> {
    match loss {
        LossKind::OneMinusB => bayes_b1(post),
        LossKind::OneMinusBSquared => bayes_b2(post),
    }
}

/// Binomial maximum-likelihood estimate (n/N, 1 − n/N).
pub fn mle(successes: u64, n_trials: u64) -> Result<ProbVector> {
    if n_trials == 0 {
        return Err(Error::InvalidParameter("MLE needs at least one trial".into()));
    }
    if successes > n_trials {
        return Err(Error::InvalidParameter(format!("successes {successes} exceed trials {n_trials}")));
    }
    ProbVector::binary(successes as f64 / n_trials as f64)
}

/// Which estimator builds a table; the Bayes and mean kinds carry the
/// conjugate Beta(β, β) prior they start from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorKind {
    BayesB1 { prior_beta: f64 },
    BayesB2 { prior_beta: f64 },
    PosteriorMean { prior_beta: f64 },
    Mle,
}

impl EstimatorKind {
    /// The Bayes estimator kind for `loss` under a Beta(β, β) prior.
    pub fn bayes(loss: LossKind, prior_beta: f64) -> Self {
        match loss {
            LossKind::OneMinusB => EstimatorKind::BayesB1 { prior_beta },
            LossKind::OneMinusBSquared => EstimatorKind::BayesB2 { prior_beta },
        }
    }

    pub fn prior_beta(&self) -> Option<f64> {
        match *self {
            EstimatorKind::BayesB1 { prior_beta }
            | EstimatorKind::BayesB2 { prior_beta }
            | EstimatorKind::PosteriorMean { prior_beta } => Some(prior_beta),
            EstimatorKind::Mle => None,
        }
    }

    /// The estimate after `successes` out of `n_trials`.
    pub fn estimate(&self, n_trials: u64, successes: u64) -> Result<ProbVector> {
        match *self {
            EstimatorKind::BayesB1 { prior_beta } => bayes_b1(&posterior_update(prior_beta, n_trials, successes)?),
            EstimatorKind::BayesB2 { prior_beta } => bayes_b2(&posterior_update(prior_beta, n_trials, successes)?),
            EstimatorKind::PosteriorMean { prior_beta } => {
                Ok(posterior_update(prior_beta, n_trials, successes)?.posterior_mean())
            }
            EstimatorKind::Mle => mle(successes, n_trials),
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorKind::BayesB1 { prior_beta } => write!(f, "bayes_b1(beta={prior_beta})"),
            EstimatorKind::BayesB2 { prior_beta } => write!(f, "bayes_b2(beta={prior_beta})"),
            EstimatorKind::PosteriorMean { prior_beta } => write!(f, "mean(beta={prior_beta})"),
            EstimatorKind::Mle => f.write_str("mle"),
        }
    }
}

/// Estimates p̂(n) for every binomial outcome n = 0..=N.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorTable {
    n_trials: u64,
    label: String,
    rows: Vec<ProbVector>,
}

impl EstimatorTable {
    /// Table from explicit binary rows; needs exactly N + 1 of them.
    pub fn from_rows(label: impl Into<String>, rows: Vec<ProbVector>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidParameter("a table needs N >= 1 (at least two rows)".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.dim() != 2) {
            return Err(Error::DimensionMismatch { left: 2, right: r.dim() });
        }
        Ok(EstimatorTable { n_trials: rows.len() as u64 - 1, label: label.into(), rows })
    }

    pub fn n_trials(&self) -> u64 {
        self.n_trials
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn rows(&self) -> &[ProbVector] {
        &self.rows
    }

    pub fn row(&self, successes: usize) -> &ProbVector {
        &self.rows[successes]
    }

    /// First components p̂(n)₀.
    pub fn first_components(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[0]).collect()
    }
}

/// Builds the table for `kind` at `n_trials`.
pub fn estimator_table(kind: EstimatorKind, n_trials: u64) -> Result<EstimatorTable> {
    if n_trials == 0 {
        return Err(Error::InvalidParameter("estimator tables need N >= 1".into()));
    }
    if let Some(b) = kind.prior_beta() {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::InvalidParameter(format!("prior beta {b} must be positive")));
        }
    }
    let rows = (0..=n_trials).map(|n| kind.estimate(n_trials, n)).collect::<Result<Vec<_>>>()?;
    EstimatorTable::from_rows(kind.to_string(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::{DirichletPosterior, ParticlePosterior};

    fn dir(a: f64, b: f64) -> DirichletPosterior {
        DirichletPosterior::new(vec![a, b]).unwrap()
    }

    #[test]
    fn point_mass_is_recovered() {
        for p0 in [0.0, 0.13, 0.5, 0.97, 1.0] {
            let p = ProbVector::binary(p0).unwrap();
            let post = ParticlePosterior::point_mass(p.clone());
            for est in [bayes_b1(&post).unwrap(), bayes_b2(&post).unwrap()] {
                assert!((est[0] - p0).abs() < 1e-12, "p0={p0} got {est:?}");
            }
        }
        let p = ProbVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let post = ParticlePosterior::point_mass(p.clone());
        let est = bayes_b2(&post).unwrap();
        for k in 0..4 {
            assert!((est[k] - p[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_prior_gives_midpoint() {
        assert_eq!(bayes_b1(&dir(1.0, 1.0)).unwrap().as_slice(), &[0.5, 0.5]);
        let b2 = bayes_b2(&dir(1.0, 1.0)).unwrap();
        assert!((b2[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn b2_is_less_hedged_than_the_mean() {
        // beta = 1/2, N = 2, n = 2
        let post = dir(2.5, 0.5);
        let b2 = bayes_b2(&post).unwrap();
        assert!(b2[0] > 5.0 / 6.0, "{b2:?}");
    }

    #[test]
    fn mle_values_and_errors() {
        assert_eq!(mle(0, 10).unwrap().as_slice(), &[0.0, 1.0]);
        assert_eq!(mle(5, 10).unwrap().as_slice(), &[0.5, 0.5]);
        let m = mle(7, 10).unwrap();
        assert!((m[0] - 0.7).abs() < 1e-15 && (m[1] - 0.3).abs() < 1e-15);
        assert!(mle(0, 0).is_err());
        assert!(mle(3, 2).is_err());
    }

    #[test]
    fn table_shapes() {
        let t = estimator_table(EstimatorKind::Mle, 10).unwrap();
        assert_eq!(t.rows().len(), 11);
        for (n, r) in t.rows().iter().enumerate() {
            assert!((r[0] - n as f64 / 10.0).abs() < 1e-15);
        }
        let t = estimator_table(EstimatorKind::PosteriorMean { prior_beta: 1.0 }, 10).unwrap();
        for (n, r) in t.rows().iter().enumerate() {
            assert!((r[0] - (n as f64 + 1.0) / 12.0).abs() < 1e-15);
        }
        assert!(estimator_table(EstimatorKind::Mle, 0).is_err());
        assert!(estimator_table(EstimatorKind::BayesB2 { prior_beta: 0.0 }, 5).is_err());
    }

    #[test]
    fn tables_are_monotone_in_outcome() {
        for kind in [
            EstimatorKind::Mle,
            EstimatorKind::PosteriorMean { prior_beta: 0.5 },
            EstimatorKind::BayesB1 { prior_beta: 0.5 },
            EstimatorKind::BayesB2 { prior_beta: 0.5 },
            EstimatorKind::BayesB2 { prior_beta: 1.0 },
            EstimatorKind::BayesB1 { prior_beta: 0.05 },
        ] {
            let c = estimator_table(kind, 17).unwrap().first_components();
            assert!(c.windows(2).all(|w| w[1] >= w[0]), "{kind}: {c:?}");
        }
    }

    #[test]
    fn b2_sits_between_mle_and_mean() {
        let n_trials = 10;
        for beta in [0.5, 1.0] {
            let b2 = estimator_table(EstimatorKind::BayesB2 { prior_beta: beta }, n_trials).unwrap();
            let mean = estimator_table(EstimatorKind::PosteriorMean { prior_beta: beta }, n_trials).unwrap();
            for n in 0..=10usize {
                let (x, m, e) = (b2.row(n)[0], mean.row(n)[0], n as f64 / 10.0);
                if n == 5 {
                    assert!((x - 0.5).abs() < 1e-12);
                    continue;
                }
                assert!((x - e) * (m - e) > 0.0 && (x - e).abs() < (m - e).abs(), "beta={beta} n={n}");
            }
        }
    }

    #[test]
    fn labels() {
        assert_eq!(EstimatorKind::BayesB2 { prior_beta: 0.5 }.to_string(), "bayes_b2(beta=0.5)");
        assert_eq!(EstimatorKind::Mle.to_string(), "mle");
        assert_eq!(EstimatorKind::bayes(LossKind::OneMinusB, 1.0), EstimatorKind::BayesB1 { prior_beta: 1.0 });
    }
}
