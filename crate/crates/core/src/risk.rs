//! Exact risk evaluation for binomial experiments: pointwise risk R(p₀),
//! posterior risk, Bayes risk under conjugate or discrete priors, and the
//! worst case over p₀.
//!
//! A general-K pointwise risk is available through
//! [`pointwise_risk_multinomial`], which enumerates outcomes when that is
//! cheap and falls back to seeded Monte Carlo otherwise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{bayes_b2, EstimatorTable};
use crate::exec::Exec;
use crate::optimize::golden_section_max;
use crate::posterior::{posterior_update, PosteriorMoments};
use crate::simplex::{loss, LossKind, ProbVector};
use crate::special::{ln_beta, ln_choose, ln_gamma};

/// Finite prior over p₀ ∈ [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPrior")]
pub struct DiscretePrior {
    support: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrior {
    support: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<RawPrior> for DiscretePrior {
    type Error = Error;

    fn try_from(raw: RawPrior) -> Result<Self> {
        DiscretePrior::new(raw.support, raw.weights)
    }
}

impl DiscretePrior {
    /// Weights must sum to one within 1e-9; they are renormalized exactly.
    pub fn new(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let sum = Self::check(&support, &weights)?;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("prior weights sum to {sum}")));
        }
        Ok(DiscretePrior { support, weights: weights.into_iter().map(|w| w / sum).collect() })
    }

    pub fn from_unnormalized(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let sum = Self::check(&support, &weights)?;
        if !(sum > 0.0) {
            return Err(Error::InvalidParameter("prior weights are all zero".into()));
        }
        Ok(DiscretePrior { support, weights: weights.into_iter().map(|w| w / sum).collect() })
    }

    pub fn point_mass(p0: f64) -> Result<Self> {
        Self::new(vec![p0], vec![1.0])
    }

    fn check(support: &[f64], weights: &[f64]) -> Result<f64> {
        if support.is_empty() {
            return Err(Error::InvalidParameter("prior needs at least one support point".into()));
        }
        if support.len() != weights.len() {
            return Err(Error::DimensionMismatch { left: support.len(), right: weights.len() });
        }
        if let Some(p) = support.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidParameter(format!("support point {p} outside [0, 1]")));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidParameter(format!("prior weight {w} is invalid")));
        }
        Ok(weights.iter().sum())
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.weights).map(|(p, w)| p * w).sum::<f64>().clamp(0.0, 1.0)
    }
}

/// Prior over the binomial parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Prior {
    /// Beta(β, β).
    Conjugate {
        beta: f64,
    },
    Discrete(DiscretePrior),
}

/// Binomial(N, p₀) probabilities of n = 0..=N, computed in log space.
pub fn binomial_weights(n_trials: u64, p0: f64) -> Vec<f64> {
    let ln_c: Vec<f64> = (0..=n_trials).map(|n| ln_choose(n_trials, n)).collect();
    binomial_weights_with(&ln_c, p0)
}

fn binomial_weights_with(ln_c: &[f64], p0: f64) -> Vec<f64> {
    let n_trials = ln_c.len() - 1;
    let mut w = vec![0.0; ln_c.len()];
    if p0 <= 0.0 {
        w[0] = 1.0;
        return w;
    }
    if p0 >= 1.0 {
        w[n_trials] = 1.0;
        return w;
    }
    let (lp, lq) = (p0.ln(), (-p0).ln_1p());
    for (n, (slot, lc)) in w.iter_mut().zip(ln_c).enumerate() {
        *slot = (lc + n as f64 * lp + (n_trials - n) as f64 * lq).exp();
    }
    w
}

/// Pointwise risk of one estimator table, with per-table quantities cached
/// so grid sweeps only pay for the binomial weights.
#[derive(Debug, Clone)]
pub struct RiskProfile {
    loss: LossKind,
    ln_choose: Vec<f64>,
    sqrt_rows: Vec<[f64; 2]>,
}

impl RiskProfile {
    pub fn new(table: &EstimatorTable, loss: LossKind) -> Self {
        let n_trials = table.n_trials();
        RiskProfile {
            loss,
            ln_choose: (0..=n_trials).map(|n| ln_choose(n_trials, n)).collect(),
            sqrt_rows: table.rows().iter().map(|r| [r[0].sqrt(), r[1].sqrt()]).collect(),
        }
    }

    /// R(p₀) = Σ_n C(N,n) p₀ⁿ (1 − p₀)^{N−n} L((p₀, 1 − p₀), p̂(n)).
    pub fn eval(&self, p0: f64) -> f64 {
        let w = binomial_weights_with(&self.ln_choose, p0);
        debug_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let (s0, s1) = (p0.sqrt(), (1.0 - p0).sqrt());
        let risk: f64 = w
            .iter()
            .zip(&self.sqrt_rows)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, r)| w * self.loss.from_coefficient(s0 * r[0] + s1 * r[1]).max(0.0))
            .sum();
        risk.clamp(0.0, 1.0)
    }
}

fn check_p0(p0: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::InvalidParameter(format!("p0 = {p0} outside [0, 1]")));
    }
    Ok(())
}

/// Pointwise (frequentist) risk at p₀.
pub fn pointwise_risk(p0: f64, table: &EstimatorTable, loss: LossKind) -> Result<f64> {
    check_p0(p0)?;
    Ok(RiskProfile::new(table, loss).eval(p0))
}

/// Posterior expected loss of reporting `estimate`, exact from the moments:
/// 1 − √qᵀ M √q for 1 − B², 1 − E[√p]·√q for 1 − B.
pub fn posterior_risk<P: PosteriorMoments + ?Sized>(post: &P, estimate: &ProbVector, loss: LossKind) -> Result<f64> {
    if post.dim() != estimate.dim() {
        return Err(Error::DimensionMismatch { left: post.dim(), right: estimate.dim() });
    }
    let q = estimate.sqrt();
    let r = match loss {
        LossKind::OneMinusBSquared => 1.0 - post.moment_matrix().quadratic_form(&q),
        LossKind::OneMinusB => 1.0 - post.sqrt_moment_vector().iter().zip(&q).map(|(a, b)| a * b).sum::<f64>(),
    };
    Ok(r.clamp(0.0, 1.0))
}

/// Marginal probability of each outcome n under a Beta(β, β) prior:
/// C(N, n) B(n + β, N − n + β) / B(β, β).
pub fn marginal_outcome_probs(prior_beta: f64, n_trials: u64) -> Result<Vec<f64>> {
    if !(prior_beta.is_finite() && prior_beta > 0.0) {
        return Err(Error::InvalidParameter(format!("prior beta {prior_beta} must be positive")));
    }
    let base = ln_beta(prior_beta, prior_beta);
    Ok((0..=n_trials)
        .map(|n| {
            let (a, b) = (n as f64 + prior_beta, (n_trials - n) as f64 + prior_beta);
            (ln_choose(n_trials, n) + ln_beta(a, b) - base).exp()
        })
        .collect())
}

/// Bayes risk of `table` under `prior`.
///
/// Conjugate priors sum the exact posterior risk over outcomes weighted by
/// their marginal probability; discrete priors average the pointwise risk.
pub fn bayes_risk(prior: &Prior, table: &EstimatorTable, loss: LossKind) -> Result<f64> {
    let n_trials = table.n_trials();
    let r = match prior {
        Prior::Conjugate { beta } => {
            let probs = marginal_outcome_probs(*beta, n_trials)?;
            let mut acc = 0.0;
            for (n, pr) in probs.iter().enumerate() {
                let post = posterior_update(*beta, n_trials, n as u64)?;
                acc += pr * posterior_risk(&post, table.row(n), loss)?;
            }
            acc
        }
        Prior::Discrete(d) => {
            let profile = RiskProfile::new(table, loss);
            d.support().iter().zip(d.weights()).map(|(p, w)| w * profile.eval(*p)).sum()
        }
    };
    Ok(r.clamp(0.0, 1.0))
}

/// Controls for the worst-case search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxRiskConfig {
    /// Uniform grid over [0, 1], endpoints included.
    pub grid_points: usize,
    /// How many of the best grid-local maxima get golden-section refinement.
    pub refine_top: usize,
    pub argmax_tol: f64,
    pub exec: Exec,
}

impl Default for MaxRiskConfig {
    fn default() -> Self {
        MaxRiskConfig { grid_points: 2001, refine_top: 3, argmax_tol: 1e-8, exec: Exec::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxRisk {
    pub p_star: f64,
    pub value: f64,
}

/// Uniform grid on [0, 1] with exact endpoints.
pub fn unit_grid(points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![0.5],
        _ => (0..points).map(|i| i as f64 / (points - 1) as f64).collect(),
    }
}

/// Pointwise risk over a uniform grid of `grid_points` values of p₀.
pub fn risk_curve(table: &EstimatorTable, loss: LossKind, grid_points: usize, exec: Exec) -> Result<Vec<(f64, f64)>> {
    if grid_points < 2 {
        return Err(Error::InvalidParameter("risk curve needs at least 2 grid points".into()));
    }
    let profile = RiskProfile::new(table, loss);
    let grid = unit_grid(grid_points);
    let risks = exec.map(&grid, |p| profile.eval(*p));
    Ok(grid.into_iter().zip(risks).collect())
}

/// Indices of grid-local maxima (plateaus count), best first.
pub(crate) fn local_maxima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || values[i] >= values[i - 1];
            let right = i + 1 == n || values[i] >= values[i + 1];
            left && right
        })
        .collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// Worst-case pointwise risk over p₀ ∈ [0, 1] with default settings.
pub fn max_risk(table: &EstimatorTable, loss: LossKind) -> Result<MaxRisk> {
    max_risk_with(table, loss, &MaxRiskConfig::default())
}

/// Grid scan followed by golden-section refinement of the best local maxima.
pub fn max_risk_with(table: &EstimatorTable, loss: LossKind, cfg: &MaxRiskConfig) -> Result<MaxRisk> {
    if cfg.grid_points < 3 {
        return Err(Error::InvalidParameter("max-risk grid needs at least 3 points".into()));
    }
    let profile = RiskProfile::new(table, loss);
    let grid = unit_grid(cfg.grid_points);
    let risks = cfg.exec.map(&grid, |p| profile.eval(*p));
    let peaks = local_maxima(&risks);
    let last = grid.len() - 1;

    let mut best = MaxRisk { p_star: grid[peaks[0]], value: risks[peaks[0]] };
    let refined = cfg.exec.map(&peaks[..cfg.refine_top.min(peaks.len())], |&i| {
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(last)];
        golden_section_max(|p| profile.eval(p), lo, hi, cfg.argmax_tol)
    });
    for (p, v) in refined {
        if v > best.value {
            best = MaxRisk { p_star: p, value: v };
        }
    }
    Ok(best)
}

/// (r_mean − r_Bayes) / r_Bayes for 1 − B² posterior risk: how much worse
/// the posterior mean does than the Bayes estimator on this posterior.
pub fn relative_suboptimality<P: PosteriorMoments + ?Sized>(post: &P) -> Result<f64> {
    let loss = LossKind::OneMinusBSquared;
    let r_bayes = posterior_risk(post, &bayes_b2(post)?, loss)?;
    let r_mean = posterior_risk(post, &post.posterior_mean(), loss)?;
    if r_bayes < 1e-14 {
        return Err(Error::UndefinedRatio(format!(
            "Bayes posterior risk is {r_bayes:e}; relative suboptimality needs a positive denominator"
        )));
    }
    Ok((r_mean - r_bayes) / r_bayes)
}

/// A risk value with the context it was computed in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    pub loss: LossKind,
    pub estimator: String,
    pub n_trials: u64,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmax_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_point: Option<Vec<(f64, f64)>>,
}

impl RiskReport {
    /// Worst-case risk, with the grid curve it was found on.
    pub fn worst_case(table: &EstimatorTable, loss: LossKind, cfg: &MaxRiskConfig) -> Result<Self> {
        let m = max_risk_with(table, loss, cfg)?;
        let curve = risk_curve(table, loss, cfg.grid_points, cfg.exec)?;
        Ok(RiskReport {
            loss,
            estimator: table.label().to_string(),
            n_trials: table.n_trials(),
            value: m.value,
            argmax_p: Some(m.p_star),
            per_point: Some(curve),
        })
    }

    pub fn bayes(prior: &Prior, table: &EstimatorTable, loss: LossKind) -> Result<Self> {
        Ok(RiskReport {
            loss,
            estimator: table.label().to_string(),
            n_trials: table.n_trials(),
            value: bayes_risk(prior, table, loss)?,
            argmax_p: None,
            per_point: None,
        })
    }
}

/// Outcome vectors above this count are sampled instead of enumerated.
pub const MAX_ENUMERATED_OUTCOMES: f64 = 1e5;

/// Number of multinomial outcome vectors, C(N + K − 1, K − 1).
pub fn outcome_count(n_trials: u64, dim: usize) -> f64 {
    let k = dim as u64;
    ln_choose(n_trials + k - 1, k - 1).exp().round()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultinomialRisk {
    pub value: f64,
    /// Zero for exact enumeration.
    pub std_error: f64,
    pub exact: bool,
    pub evaluations: usize,
}

fn for_each_composition(n_trials: u64, dim: usize, f: &mut dyn FnMut(&[u64]) -> Result<()>) -> Result<()> {
    fn rec(pos: usize, left: u64, counts: &mut [u64], f: &mut dyn FnMut(&[u64]) -> Result<()>) -> Result<()> {
        if pos + 1 == counts.len() {
            counts[pos] = left;
            return f(counts);
        }
        for c in 0..=left {
            counts[pos] = c;
            rec(pos + 1, left - c, counts, f)?;
        }
        Ok(())
    }
    let mut counts = vec![0; dim];
    rec(0, n_trials, &mut counts, f)
}

/// Pointwise risk for a K-outcome multinomial experiment, where `estimator`
/// maps observed counts to an estimate.
///
/// Exact when the outcome space has at most [`MAX_ENUMERATED_OUTCOMES`]
/// elements; otherwise averages `mc_draws` seeded samples and reports the
/// standard error.
pub fn pointwise_risk_multinomial<F>(
    p: &ProbVector,
    n_trials: u64,
    estimator: F,
    loss_kind: LossKind,
    mc_draws: usize,
    seed: u64,
) -> Result<MultinomialRisk>
where
    F: Fn(&[u64]) -> Result<ProbVector>,
{
    let dim = p.dim();
    if outcome_count(n_trials, dim) <= MAX_ENUMERATED_OUTCOMES {
        let ln_n_fact = ln_gamma(n_trials as f64 + 1.0);
        let ln_p: Vec<f64> = p.as_slice().iter().map(|x| x.ln()).collect();
        let mut acc = 0.0;
        let mut evaluations = 0;
        for_each_composition(n_trials, dim, &mut |counts| {
            let mut lw = ln_n_fact;
            for (c, lp) in counts.iter().zip(&ln_p) {
                if *c > 0 {
                    lw += *c as f64 * lp - ln_gamma(*c as f64 + 1.0);
                }
            }
            let w = lw.exp();
            if w > 0.0 {
                acc += w * loss(loss_kind, p, &estimator(counts)?)?;
                evaluations += 1;
            }
            Ok(())
        })?;
        return Ok(MultinomialRisk { value: acc.clamp(0.0, 1.0), std_error: 0.0, exact: true, evaluations });
    }

    if mc_draws < 2 {
        return Err(Error::InvalidParameter("Monte-Carlo risk needs at least 2 draws".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; dim];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..mc_draws {
        let mut left = n_trials;
        let mut mass = 1.0;
        for k in 0..dim {
            if k + 1 == dim {
                counts[k] = left;
                break;
            }
            let q = if mass > 0.0 { (p[k] / mass).clamp(0.0, 1.0) } else { 0.0 };
            counts[k] = if left == 0 {
                0
            } else {
                Binomial::new(left, q).map_err(|e| Error::InvalidParameter(e.to_string()))?.sample(&mut rng)
            };
            left -= counts[k];
            mass -= p[k];
        }
        let l = loss(loss_kind, p, &estimator(&counts)?)?;
        sum += l;
        sum_sq += l * l;
    }
    let m = mc_draws as f64;
    let mean = sum / m;
    let var = ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0);
    Ok(MultinomialRisk {
        value: mean.clamp(0.0, 1.0),
        std_error: (var / m).sqrt(),
        exact: false,
        evaluations: mc_draws,
    })
}
