//! Posterior representations and the two moment objects the Bayes
//! estimators consume: E[√p] and the matrix E[√(p_i p_j)].
//!
//! Dirichlet posteriors use closed forms evaluated in log space. Weighted
//! particle sets cover everything else (discrete priors, non-conjugate
//! likelihoods computed elsewhere).

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::ProbVector;
use crate::special::{ln_gamma, ln_gamma_half_ratio};

/// Tolerance on the weight sum of a particle posterior before renormalizing.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// The two moments every Bayes estimator in this crate needs.
pub trait PosteriorMoments {
    fn dim(&self) -> usize;

    /// E[√p_k] for each component.
    fn sqrt_moment_vector(&self) -> Vec<f64>;

    /// E[√(p_i p_j)].
    fn moment_matrix(&self) -> MomentMatrix;

    fn posterior_mean(&self) -> ProbVector;
}

/// Dirichlet(α) posterior; Beta for K = 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDirichlet")]
pub struct DirichletPosterior {
    alpha: Vec<f64>,
}

#[derive(Deserialize)]
struct RawDirichlet {
    alpha: Vec<f64>,
}

impl TryFrom<RawDirichlet> for DirichletPosterior {
    type Error = Error;

    fn try_from(raw: RawDirichlet) -> Result<Self> {
        DirichletPosterior::new(raw.alpha)
    }
}

impl DirichletPosterior {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::InvalidParameter(format!("Dirichlet needs K >= 2, got {}", alpha.len())));
        }
        if let Some(a) = alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::InvalidParameter(format!("concentration {a} must be positive")));
        }
        Ok(DirichletPosterior { alpha })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn concentration(&self) -> f64 {
        self.alpha.iter().sum()
    }

    /// Adds observed counts to the concentration parameters.
    pub fn observe(&self, counts: &[u64]) -> Result<Self> {
        if counts.len() != self.alpha.len() {
            return Err(Error::DimensionMismatch { left: self.alpha.len(), right: counts.len() });
        }
        Self::new(self.alpha.iter().zip(counts).map(|(a, c)| a + *c as f64).collect())
    }

    /// One draw via normalized independent Gamma variates.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ProbVector {
        let mut draws: Vec<f64> =
            self.alpha.iter().map(|&a| Gamma::new(a, 1.0).expect("alpha validated").sample(rng)).collect();
        let mut total: f64 = draws.iter().sum();
        if !(total > 0.0) {
            // every Gamma draw underflowed; only possible for tiny alphas
            let k = self.alpha.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| k).unwrap_or(0);
            draws.iter_mut().for_each(|x| *x = 0.0);
            draws[k] = 1.0;
            total = 1.0;
        }
        draws.iter_mut().for_each(|x| *x /= total);
        ProbVector::new(draws).expect("normalized gamma draws lie in the simplex")
    }
}

/// Conjugate Beta(β, β) prior updated with `successes` out of `n_trials`:
/// α = (n + β, N − n + β).
pub fn posterior_update(prior_beta: f64, n_trials: u64, successes: u64) -> Result<DirichletPosterior> {
    if !(prior_beta.is_finite() && prior_beta > 0.0) {
        return Err(Error::InvalidParameter(format!("prior beta {prior_beta} must be positive")));
    }
    if successes > n_trials {
        return Err(Error::InvalidParameter(format!("successes {successes} exceed trials {n_trials}")));
    }
    DirichletPosterior::new(vec![successes as f64 + prior_beta, (n_trials - successes) as f64 + prior_beta])
}

impl PosteriorMoments for DirichletPosterior {
    fn dim(&self) -> usize {
        self.alpha.len()
    }

    fn sqrt_moment_vector(&self) -> Vec<f64> {
        let a0 = self.concentration();
        let norm = -ln_gamma_half_ratio(a0);
        self.alpha.iter().map(|&a| (ln_gamma_half_ratio(a) + norm).exp()).collect()
    }

    fn moment_matrix(&self) -> MomentMatrix {
        let k = self.alpha.len();
        let a0 = self.concentration();
        // lnΓ(α₀) − lnΓ(α₀ + 1) = −ln α₀
        let ln_norm = ln_gamma(a0) - ln_gamma(a0 + 1.0);
        let h: Vec<f64> = self.alpha.iter().map(|&a| ln_gamma_half_ratio(a)).collect();
        let mut m = vec![0.0; k * k];
        for i in 0..k {
            m[i * k + i] = self.alpha[i] / a0;
            for j in (i + 1)..k {
                let v = (h[i] + h[j] + ln_norm).exp();
                m[i * k + j] = v;
                m[j * k + i] = v;
            }
        }
        MomentMatrix { dim: k, data: m }
    }

    fn posterior_mean(&self) -> ProbVector {
        let a0 = self.concentration();
        ProbVector::new(self.alpha.iter().map(|a| a / a0).collect()).expect("alpha / alpha0 lies in the simplex")
    }
}

/// A weighted set of simplex points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticlePosterior {
    points: Vec<ProbVector>,
    weights: Vec<f64>,
}

impl ParticlePosterior {
    /// Weights must be nonnegative and sum to one within 1e-9.
    pub fn new(points: Vec<ProbVector>, weights: Vec<f64>) -> Result<Self> {
        let sum = Self::check(&points, &weights)?;
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidParameter(format!("particle weights sum to {sum}")));
        }
        let weights = weights.into_iter().map(|w| w / sum).collect();
        Ok(ParticlePosterior { points, weights })
    }

    /// Normalizes arbitrary nonnegative weights with a positive total.
    pub fn from_unnormalized(points: Vec<ProbVector>, weights: Vec<f64>) -> Result<Self> {
        let sum = Self::check(&points, &weights)?;
        if !(sum > 0.0) {
            return Err(Error::InvalidParameter("particle weights are all zero".into()));
        }
        let weights = weights.into_iter().map(|w| w / sum).collect();
        Ok(ParticlePosterior { points, weights })
    }

    pub fn point_mass(p: ProbVector) -> Self {
        ParticlePosterior { points: vec![p], weights: vec![1.0] }
    }

    fn check(points: &[ProbVector], weights: &[f64]) -> Result<f64> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("particle posterior needs at least one point".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch { left: points.len(), right: weights.len() });
        }
        let k = points[0].dim();
        if let Some(p) = points.iter().find(|p| p.dim() != k) {
            return Err(Error::DimensionMismatch { left: k, right: p.dim() });
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidParameter(format!("particle weight {w} is invalid")));
        }
        Ok(weights.iter().sum())
    }

    pub fn points(&self) -> &[ProbVector] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl<'de> Deserialize<'de> for ParticlePosterior {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            points: Vec<ProbVector>,
            weights: Vec<f64>,
        }
        let raw = Raw::deserialize(d)?;
        ParticlePosterior::new(raw.points, raw.weights).map_err(serde::de::Error::custom)
    }
}

impl PosteriorMoments for ParticlePosterior {
    fn dim(&self) -> usize {
        self.points[0].dim()
    }

    fn sqrt_moment_vector(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim()];
        for (p, w) in self.points.iter().zip(&self.weights) {
            for (a, x) in acc.iter_mut().zip(p.as_slice()) {
                *a += w * x.sqrt();
            }
        }
        acc
    }

    fn moment_matrix(&self) -> MomentMatrix {
        let k = self.dim();
        let mut m = vec![0.0; k * k];
        for (p, w) in self.points.iter().zip(&self.weights) {
            let s = p.sqrt();
            for i in 0..k {
                for j in i..k {
                    m[i * k + j] += w * s[i] * s[j];
                }
            }
        }
        for i in 0..k {
            for j in (i + 1)..k {
                m[j * k + i] = m[i * k + j];
            }
        }
        MomentMatrix { dim: k, data: m }
    }

    fn posterior_mean(&self) -> ProbVector {
        let mut acc = vec![0.0; self.dim()];
        for (p, w) in self.points.iter().zip(&self.weights) {
            for (a, x) in acc.iter_mut().zip(p.as_slice()) {
                *a += w * x;
            }
        }
        ProbVector::new(acc).expect("convex combination of simplex points")
    }
}

/// Either posterior representation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Posterior {
    Dirichlet(DirichletPosterior),
    Particle(ParticlePosterior),
}

impl From<DirichletPosterior> for Posterior {
    fn from(p: DirichletPosterior) -> Self {
        Posterior::Dirichlet(p)
    }
}

impl From<ParticlePosterior> for Posterior {
    fn from(p: ParticlePosterior) -> Self {
        Posterior::Particle(p)
    }
}

impl PosteriorMoments for Posterior {
    fn dim(&self) -> usize {
        match self {
            Posterior::Dirichlet(p) => p.dim(),
            Posterior::Particle(p) => p.dim(),
        }
    }

    fn sqrt_moment_vector(&self) -> Vec<f64> {
        match self {
            Posterior::Dirichlet(p) => p.sqrt_moment_vector(),
            Posterior::Particle(p) => p.sqrt_moment_vector(),
        }
    }

    fn moment_matrix(&self) -> MomentMatrix {
        match self {
            Posterior::Dirichlet(p) => p.moment_matrix(),
            Posterior::Particle(p) => p.moment_matrix(),
        }
    }

    fn posterior_mean(&self) -> ProbVector {
        match self {
            Posterior::Dirichlet(p) => p.posterior_mean(),
            Posterior::Particle(p) => p.posterior_mean(),
        }
    }
}

/// Symmetric K×K matrix of E[√(p_i p_j)], row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl MomentMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// vᵀ M v
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let k = self.dim;
        let mut acc = 0.0;
        for i in 0..k {
            let row = &self.data[i * k..(i + 1) * k];
            acc += v[i] * row.iter().zip(v).map(|(m, x)| m * x).sum::<f64>();
        }
        acc
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }
}
