//! Minimax estimators through Bayes–minimax duality.
//!
//! Two searches are provided: a one-parameter scan over conjugate Beta(β, β)
//! priors, and Kempthorne's least-favorable-prior algorithm, which grows a
//! discrete prior until the Bayes risk of its Bayes estimator (a lower bound
//! on the minimax risk) meets that estimator's worst-case risk (an upper
//! bound).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{bayes_estimate, estimator_table, EstimatorKind, EstimatorTable};
use crate::exec::Exec;
use crate::optimize::{golden_section_min, NelderMead};
use crate::posterior::ParticlePosterior;
use crate::risk::{
    bayes_risk, local_maxima, max_risk_with, risk_curve, DiscretePrior, MaxRiskConfig, Prior, RiskProfile,
};
use crate::simplex::{LossKind, ProbVector};
use crate::special::ln_choose;

/// Estimator family whose conjugate prior the β-scan tunes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorFamily {
    /// The Bayes estimator for the loss being scanned.
    Bayes,
    /// The posterior mean.
    Mean,
}

impl EstimatorFamily {
    pub fn kind(self, loss: LossKind, prior_beta: f64) -> EstimatorKind {
        match self {
            EstimatorFamily::Bayes => EstimatorKind::bayes(loss, prior_beta),
            EstimatorFamily::Mean => EstimatorKind::PosteriorMean { prior_beta },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaScanConfig {
    pub beta_min: f64,
    pub beta_max: f64,
    /// Number of β grid points, endpoints included.
    pub resolution: usize,
    /// Golden-section bracket width at which refinement stops.
    pub beta_tol: f64,
    pub max_risk: MaxRiskConfig,
    pub exec: Exec,
}

impl Default for BetaScanConfig {
    fn default() -> Self {
        BetaScanConfig {
            beta_min: 0.05,
            beta_max: 2.0,
            resolution: 196,
            beta_tol: 1e-3,
            max_risk: MaxRiskConfig::default(),
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaScan {
    pub beta_star: f64,
    pub max_risk_star: f64,
    /// (β, max risk) on the scan grid.
    pub curve: Vec<(f64, f64)>,
}

/// Finds the conjugate prior β whose estimator has the smallest worst-case
/// risk: grid scan, then golden-section refinement around the best grid
/// point.
pub fn beta_scan(n_trials: u64, loss: LossKind, family: EstimatorFamily, cfg: &BetaScanConfig) -> Result<BetaScan> {
    if !(cfg.beta_min > 0.0 && cfg.beta_max > cfg.beta_min && cfg.beta_max.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "beta range [{}, {}] must satisfy 0 < min < max",
            cfg.beta_min, cfg.beta_max
        )));
    }
    if cfg.resolution < 3 {
        return Err(Error::InvalidParameter("beta scan needs at least 3 grid points".into()));
    }
    if !(cfg.beta_tol > 0.0) {
        return Err(Error::InvalidParameter("beta tolerance must be positive".into()));
    }
    let worst = |beta: f64| -> Result<f64> {
        let table = estimator_table(family.kind(loss, beta), n_trials)?;
        Ok(max_risk_with(&table, loss, &cfg.max_risk)?.value)
    };

    let step = (cfg.beta_max - cfg.beta_min) / (cfg.resolution - 1) as f64;
    let betas: Vec<f64> = (0..cfg.resolution).map(|i| cfg.beta_min + i as f64 * step).collect();
    let values = cfg.exec.map(&betas, |b| worst(*b)).into_iter().collect::<Result<Vec<f64>>>()?;

    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    let lo = betas[best.saturating_sub(1)];
    let hi = betas[(best + 1).min(betas.len() - 1)];
    let (b_ref, v_ref) = golden_section_min(|b| worst(b).unwrap_or(f64::INFINITY), lo, hi, cfg.beta_tol);
    let (beta_star, max_risk_star) = if v_ref < values[best] { (b_ref, v_ref) } else { (betas[best], values[best]) };

    Ok(BetaScan { beta_star, max_risk_star, curve: betas.into_iter().zip(values).collect() })
}

/// ln Pr(n | p₀) for all n, with 0·ln 0 = 0.
fn ln_likelihoods(n_trials: u64, p0: f64, ln_c: &[f64]) -> Vec<f64> {
    let (lp, lq) = (p0.ln(), (-p0).ln_1p());
    (0..=n_trials)
        .map(|n| {
            let a = if n == 0 { 0.0 } else { n as f64 * lp };
            let b = if n == n_trials { 0.0 } else { (n_trials - n) as f64 * lq };
            ln_c[n as usize] + a + b
        })
        .collect()
}

/// The Bayes estimator of a discrete prior, one row per outcome.
///
/// Each row is the Bayes estimate for the particle posterior over the
/// prior's support. Outcomes the prior gives zero probability get the prior
/// mean; they carry no weight in any risk over the support.
pub fn bayes_estimator_for_discrete_prior(
    prior: &DiscretePrior,
    n_trials: u64,
    loss: LossKind,
) -> Result<EstimatorTable> {
    if n_trials == 0 {
        return Err(Error::InvalidParameter("need N >= 1".into()));
    }
    let ln_c: Vec<f64> = (0..=n_trials).map(|n| ln_choose(n_trials, n)).collect();
    let points = prior.support().iter().map(|p| ProbVector::binary(*p)).collect::<Result<Vec<_>>>()?;
    let ln_joint: Vec<Vec<f64>> = prior
        .support()
        .iter()
        .zip(prior.weights())
        .map(|(p, w)| {
            let lw = w.ln();
            ln_likelihoods(n_trials, *p, &ln_c).into_iter().map(|l| l + lw).collect()
        })
        .collect();

    let mut rows = Vec::with_capacity(n_trials as usize + 1);
    for n in 0..=n_trials as usize {
        let top = ln_joint.iter().map(|l| l[n]).fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            rows.push(ProbVector::binary(prior.mean())?);
            continue;
        }
        let weights: Vec<f64> = ln_joint.iter().map(|l| (l[n] - top).exp()).collect();
        let post = ParticlePosterior::from_unnormalized(points.clone(), weights)?;
        rows.push(bayes_estimate(&post, loss)?);
    }
    EstimatorTable::from_rows(format!("bayes_{}(discrete prior, {} points)", loss, prior.len()), rows)
}

/// Bayes risk of a discrete prior's own Bayes estimator.
pub fn discrete_prior_bayes_risk(
    prior: &DiscretePrior,
    n_trials: u64,
    loss: LossKind,
) -> Result<(f64, EstimatorTable)> {
    let table = bayes_estimator_for_discrete_prior(prior, n_trials, loss)?;
    let r = bayes_risk(&Prior::Discrete(prior.clone()), &table, loss)?;
    Ok((r, table))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KempthorneConfig {
    pub n_trials: u64,
    pub loss: LossKind,
    /// Stop when |avg − max| / avg ≤ tol.
    pub tol: f64,
    /// Weight given to each newly added support point.
    pub alpha_mix: f64,
    pub max_outer_iters: usize,
    /// Nelder–Mead starts per inner maximization.
    pub restarts: usize,
    /// Inner convergence: simplex diameter in the unconstrained coordinates.
    pub simplex_tol: f64,
    /// Evaluation budget per start, per optimized coordinate.
    pub evals_per_dim: usize,
    /// Std. dev. of the perturbation applied to random restarts.
    pub restart_spread: f64,
    /// Support points closer than this are merged.
    pub merge_tol: f64,
    pub seed: u64,
    pub max_risk: MaxRiskConfig,
    pub exec: Exec,
}

impl KempthorneConfig {
    pub fn new(n_trials: u64, loss: LossKind) -> Self {
        KempthorneConfig {
            n_trials,
            loss,
            tol: 1e-3,
            alpha_mix: 0.01,
            max_outer_iters: 50,
            restarts: 5,
            simplex_tol: 1e-6,
            evals_per_dim: 4000,
            restart_spread: 0.5,
            merge_tol: 1e-4,
            seed: 0,
            max_risk: MaxRiskConfig::default(),
            exec: Exec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.n_trials == 0 {
            return bad("N must be at least 1");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if !(self.alpha_mix > 0.0 && self.alpha_mix < 1.0) {
            return bad("alpha_mix must lie in (0, 1)");
        }
        if self.max_outer_iters == 0 || self.restarts == 0 {
            return bad("iteration counts must be positive");
        }
        if !(self.simplex_tol > 0.0 && self.merge_tol >= 0.0 && self.restart_spread >= 0.0) {
            return bad("optimizer tolerances must be nonnegative");
        }
        Ok(())
    }
}

/// One outer iteration of the least-favorable-prior search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KempthorneIteration {
    pub support_size: usize,
    pub avg_risk: f64,
    pub max_risk: f64,
    pub diff: f64,
    /// Where the worst-case risk is attained.
    pub argmax: f64,
    pub inner_evals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KempthorneResult {
    pub prior: DiscretePrior,
    /// Lower bound on the minimax risk.
    pub avg_risk: f64,
    /// Upper bound on the minimax risk.
    pub max_risk: f64,
    pub diff: f64,
    pub outer_iters: usize,
    pub converged: bool,
    pub history: Vec<KempthorneIteration>,
    /// Bayes estimator of `prior`; minimax up to `diff`.
    pub table: EstimatorTable,
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-15, 1.0 - 1e-15);
    (p / (1.0 - p)).ln()
}

/// Locations via logit, weights as log-ratios against the last weight.
fn encode(prior: &DiscretePrior) -> Vec<f64> {
    let m = prior.len();
    let lw: Vec<f64> = prior.weights().iter().map(|w| w.max(1e-300).ln()).collect();
    let mut x: Vec<f64> = prior.support().iter().map(|p| logit(*p)).collect();
    x.extend((0..m - 1).map(|i| lw[i] - lw[m - 1]));
    x
}

fn decode(x: &[f64], m: usize) -> Result<DiscretePrior> {
    let support = x[..m].iter().map(|v| logistic(*v)).collect();
    let mut z: Vec<f64> = x[m..].to_vec();
    z.push(0.0);
    let top = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights = z.iter().map(|v| (v - top).exp()).collect();
    DiscretePrior::from_unnormalized(support, weights)
}

/// Merges support points closer than `tol`, adding weights and averaging
/// locations.
fn merge_close(prior: &DiscretePrior, tol: f64) -> Result<DiscretePrior> {
    let mut pts: Vec<(f64, f64)> = prior.support().iter().copied().zip(prior.weights().iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for (p, w) in pts {
        match merged.last_mut() {
            Some((q, v)) if p - *q < tol => {
                let total = *v + w;
                if total > 0.0 {
                    *q = (*q * *v + p * w) / total;
                }
                *v = total;
            }
            _ => merged.push((p, w)),
        }
    }
    let (support, weights) = merged.into_iter().unzip();
    DiscretePrior::from_unnormalized(support, weights)
}

struct InnerResult {
    prior: DiscretePrior,
    evals: usize,
}

/// Maximizes the Bayes risk of the prior's own Bayes estimator over priors
/// with the same number of support points.
fn maximize_bayes_risk(cfg: &KempthorneConfig, starts: &[DiscretePrior], outer_iter: usize) -> Result<InnerResult> {
    let m = starts[0].len();
    let mut xs: Vec<Vec<f64>> = starts.iter().map(encode).collect();
    let base = xs[0].clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (outer_iter as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    while xs.len() < cfg.restarts.max(starts.len()) {
        let x = base
            .iter()
            .map(|v| {
                v + cfg.restart_spread * {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z
                }
            })
            .collect::<Vec<f64>>();
        xs.push(x);
    }

    let dim = base.len();
    let nm = NelderMead { initial_step: 0.5, diameter_tol: cfg.simplex_tol, max_evals: cfg.evals_per_dim * dim.max(1) };
    let objective = |x: &[f64]| -> f64 {
        match decode(x, m).and_then(|p| discrete_prior_bayes_risk(&p, cfg.n_trials, cfg.loss)) {
            Ok((r, _)) => -r,
            Err(_) => f64::NAN,
        }
    };
    let results = cfg.exec.map(&xs, |x0| nm.minimize(objective, x0));

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut evals = 0;
    for r in results {
        let r = r?;
        evals += r.evals;
        if best.as_ref().is_none_or(|(v, _)| r.value < *v) {
            best = Some((r.value, r.x));
        }
    }
    let (_, x) = best.expect("at least one start");
    Ok(InnerResult { prior: decode(&x, m)?, evals })
}

/// Worst-case risk of `table`, never below the pointwise risk at any of
/// `support`, so the Bayes risk over `support` cannot exceed it.
fn worst_case_over(table: &EstimatorTable, support: &[f64], cfg: &KempthorneConfig) -> Result<(f64, f64)> {
    let m = max_risk_with(table, cfg.loss, &cfg.max_risk)?;
    let profile = RiskProfile::new(table, cfg.loss);
    let mut best = (m.p_star, m.value);
    for p in support {
        let v = profile.eval(*p);
        if v > best.1 {
            best = (*p, v);
        }
    }
    Ok(best)
}

/// Kempthorne's least-favorable-prior iteration.
///
/// Each outer step maximizes the Bayes risk over priors with the current
/// support size, evaluates the worst-case risk of the resulting Bayes
/// estimator, and, if the two disagree by more than `tol` (relative), adds a
/// support point at the worst case with weight `alpha_mix`, taking
/// `alpha_mix / M` from each of the M existing weights.
pub fn kempthorne(cfg: &KempthorneConfig, init: &DiscretePrior) -> Result<KempthorneResult> {
    cfg.validate()?;
    let mut prior = init.clone();
    let mut carried: Option<DiscretePrior> = None;
    let mut history: Vec<KempthorneIteration> = Vec::new();
    let mut best: Option<(DiscretePrior, EstimatorTable, f64)> = None;
    let mut best_avg = f64::NEG_INFINITY;

    for iter in 1..=cfg.max_outer_iters {
        let mut starts = vec![prior.clone()];
        starts.extend(carried.take());
        let inner = maximize_bayes_risk(cfg, &starts, iter)?;
        let found = merge_close(&inner.prior, cfg.merge_tol)?;
        let (avg_risk, table) = discrete_prior_bayes_risk(&found, cfg.n_trials, cfg.loss)?;
        let (argmax, max_risk) = worst_case_over(&table, found.support(), cfg)?;
        let diff = if avg_risk > 0.0 { (avg_risk - max_risk).abs() / avg_risk } else { f64::INFINITY };
        history.push(KempthorneIteration {
            support_size: found.len(),
            avg_risk,
            max_risk,
            diff,
            argmax,
            inner_evals: inner.evals,
        });

        if diff <= cfg.tol {
            return Ok(KempthorneResult {
                prior: found,
                avg_risk,
                max_risk,
                diff,
                outer_iters: iter,
                converged: true,
                history,
                table,
            });
        }
        best_avg = best_avg.max(avg_risk);
        if best.as_ref().is_none_or(|b| max_risk < b.2) {
            best = Some((found.clone(), table, max_risk));
        }

        // new support point at the worst case
        let m_old = found.len() as f64;
        let mut support = found.support().to_vec();
        let mut weights: Vec<f64> = found.weights().iter().map(|w| (w - cfg.alpha_mix / m_old).max(0.0)).collect();
        support.push(argmax);
        weights.push(cfg.alpha_mix);
        prior = DiscretePrior::from_unnormalized(support.clone(), weights)?;

        // also restart from the previous optimum with a negligible new point,
        // so the larger search space cannot end below the previous maximum
        let mut weights: Vec<f64> = found.weights().to_vec();
        weights.push(1e-9);
        carried = Some(DiscretePrior::from_unnormalized(support, weights)?);
    }

    let (prior, table, max_risk) = best.expect("at least one outer iteration ran");
    let avg_risk = best_avg;
    Ok(KempthorneResult {
        prior,
        avg_risk,
        max_risk,
        diff: (avg_risk - max_risk).abs() / avg_risk,
        outer_iters: cfg.max_outer_iters,
        converged: false,
        history,
        table,
    })
}

/// Starting prior: equal weights on the two largest local maxima of the
/// pointwise risk of the β-scan-optimal Bayes estimator.
pub fn default_initial_prior(
    n_trials: u64,
    loss: LossKind,
    scan_cfg: &BetaScanConfig,
    merge_tol: f64,
) -> Result<DiscretePrior> {
    let scan = beta_scan(n_trials, loss, EstimatorFamily::Bayes, scan_cfg)?;
    let table = estimator_table(EstimatorKind::bayes(loss, scan.beta_star), n_trials)?;
    let curve = risk_curve(&table, loss, scan_cfg.max_risk.grid_points, scan_cfg.exec)?;
    let values: Vec<f64> = curve.iter().map(|c| c.1).collect();
    let mut picks: Vec<f64> = Vec::new();
    for i in local_maxima(&values) {
        let p = curve[i].0;
        if picks.iter().all(|q| (q - p).abs() > merge_tol) {
            picks.push(p);
        }
        if picks.len() == 2 {
            break;
        }
    }
    if picks.len() == 1 && (1.0 - 2.0 * picks[0]).abs() > merge_tol {
        picks.push(1.0 - picks[0]);
    }
    let w = vec![1.0 / picks.len() as f64; picks.len()];
    DiscretePrior::new(picks, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_decode_roundtrip() {
        let prior = DiscretePrior::new(vec![0.1, 0.5, 0.93], vec![0.2, 0.3, 0.5]).unwrap();
        let back = decode(&encode(&prior), 3).unwrap();
        for (a, b) in prior.support().iter().zip(back.support()) {
            assert!((a - b).abs() < 1e-14);
        }
        for (a, b) in prior.weights().iter().zip(back.weights()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(logistic(800.0), 1.0);
        assert_eq!(logistic(-800.0), 0.0);
    }

    #[test]
    fn merge_adds_weights() {
        let prior = DiscretePrior::new(vec![0.3, 0.30005, 0.8], vec![0.25, 0.25, 0.5]).unwrap();
        let m = merge_close(&prior, 1e-4).unwrap();
        assert_eq!(m.len(), 2);
        assert!((m.support()[0] - 0.300025).abs() < 1e-12);
        assert!((m.weights()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn point_mass_prior_table() {
        for loss in [LossKind::OneMinusB, LossKind::OneMinusBSquared] {
            let t = bayes_estimator_for_discrete_prior(&DiscretePrior::point_mass(0.3).unwrap(), 7, loss).unwrap();
            assert!(t.rows().iter().all(|r| (r[0] - 0.3).abs() < 1e-12));
        }
    }

    #[test]
    fn two_corner_prior_single_trial() {
        let prior = DiscretePrior::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let t = bayes_estimator_for_discrete_prior(&prior, 1, LossKind::OneMinusBSquared).unwrap();
        assert_eq!(t.row(0).as_slice(), &[0.0, 1.0]);
        assert_eq!(t.row(1).as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn impossible_outcome_gets_prior_mean() {
        // n = 1 of 2 is impossible under {0, 1}
        let prior = DiscretePrior::new(vec![0.0, 1.0], vec![0.25, 0.75]).unwrap();
        let t = bayes_estimator_for_discrete_prior(&prior, 2, LossKind::OneMinusBSquared).unwrap();
        assert_eq!(t.row(1)[0], 0.75);
    }

    #[test]
    fn config_validation() {
        let mut c = KempthorneConfig::new(3, LossKind::OneMinusBSquared);
        assert!(c.validate().is_ok());
        c.alpha_mix = 1.0;
        assert!(c.validate().is_err());
        c.alpha_mix = 0.01;
        c.tol = 0.0;
        assert!(c.validate().is_err());
        assert!(KempthorneConfig::new(0, LossKind::OneMinusB).validate().is_err());
    }

    #[test]
    fn beta_scan_rejects_bad_range() {
        let cfg = BetaScanConfig { beta_min: 0.0, ..Default::default() };
        assert!(beta_scan(5, LossKind::OneMinusBSquared, EstimatorFamily::Bayes, &cfg).is_err());
        let cfg = BetaScanConfig { beta_min: 2.0, beta_max: 1.0, ..Default::default() };
        assert!(beta_scan(5, LossKind::OneMinusBSquared, EstimatorFamily::Bayes, &cfg).is_err());
    }
}
