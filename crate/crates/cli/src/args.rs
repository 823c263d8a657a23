//! Flag definitions. Every numeric range is checked by `validate` before a
//! command runs, so core errors past that point are numeric failures.

use std::path::PathBuf;

use bhatt_core::LossKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::CliError;

#[derive(Parser, Debug, Clone)]
#[command(name = "bhatt", version, about = "Bayes and minimax estimation under Bhattacharyya losses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the main output to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Seed for every randomized step (recorded in JSON metadata).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Run single-threaded.
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Point estimate for one outcome or a particle posterior (JSON).
    Estimate(EstimateArgs),
    /// Pointwise risk of several estimators over a p0 grid (CSV).
    RiskCurve(RiskCurveArgs),
    /// Relative posterior-risk gap of the posterior mean per outcome (CSV).
    Reldiff(ReldiffArgs),
    /// Conjugate prior minimizing worst-case risk (JSON, optional CSV curve).
    BetaScan(BetaScanArgs),
    /// Least favorable prior via Kempthorne's algorithm (JSON).
    Lfp(LfpArgs),
    /// First components of the MLE, mean and both Bayes estimators (CSV).
    Compare(CompareArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Estimate(_) => "estimate",
            Command::RiskCurve(_) => "risk-curve",
            Command::Reldiff(_) => "reldiff",
            Command::BetaScan(_) => "beta-scan",
            Command::Lfp(_) => "lfp",
            Command::Compare(_) => "compare",
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match self {
            Command::Estimate(a) => a.validate(),
            Command::RiskCurve(a) => a.validate(),
            Command::Reldiff(a) => a.validate(),
            Command::BetaScan(a) => a.validate(),
            Command::Lfp(a) => a.validate(),
            Command::Compare(a) => a.validate(),
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorArg {
    Bayes,
    Mean,
    Mle,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    Bayes,
    Mean,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn check_trials(n_trials: u64) -> Result<(), CliError> {
    if n_trials == 0 {
        return Err(usage("--N must be at least 1"));
    }
    Ok(())
}

fn check_beta(flag: &str, beta: f64) -> Result<(), CliError> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(usage(format!("{flag} must be a positive number, got {beta}")));
    }
    Ok(())
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EstimateArgs {
    /// Observed successes.
    #[arg(long = "n")]
    #[serde(rename = "n")]
    pub successes: Option<u64>,
    /// Number of trials.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n_trials: Option<u64>,
    /// Beta(β, β) prior parameter.
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long, default_value = "b2")]
    pub loss: LossKind,
    #[arg(long, value_enum, default_value = "bayes")]
    pub estimator: EstimatorArg,
    /// Particle posterior JSON: {"points": [[...], ...], "weights": [...]}.
    #[arg(long, conflicts_with_all = ["successes", "n_trials"])]
    pub posterior_file: Option<PathBuf>,
}

impl EstimateArgs {
    pub fn validate(&self) -> Result<(), CliError> {
        check_beta("--beta", self.beta)?;
        if self.posterior_file.is_some() {
            if self.estimator == EstimatorArg::Mle {
                return Err(usage("the MLE needs counts, not a posterior file"));
            }
            return Ok(());
        }
        match (self.successes, self.n_trials) {
            (Some(n), Some(total)) => {
                check_trials(total)?;
                if n > total {
                    return Err(usage(format!("--n {n} exceeds --N {total}")));
                }
                Ok(())
            }
            _ => Err(usage("give --n and --N, or --posterior-file")),
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RiskCurveArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n_trials: u64,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long, default_value = "b2")]
    pub loss: LossKind,
    /// Comma list of mle, mean, bayes, bayes_b1, bayes_b2.
    #[arg(long, value_delimiter = ',', default_value = "mle,mean,bayes")]
    pub estimators: Vec<String>,
    /// Number of grid points on [0, 1], endpoints included.
    #[arg(long, default_value_t = 501)]
    pub grid: usize,
}

pub const CURVE_ESTIMATORS: [&str; 5] = ["mle", "mean", "bayes", "bayes_b1", "bayes_b2"];

impl RiskCurveArgs {
    pub fn validate(&self) -> Result<(), CliError> {
        check_trials(self.n_trials)?;
        check_beta("--beta", self.beta)?;
        if self.grid < 2 {
            return Err(usage("--grid must be at least 2"));
        }
        if self.estimators.is_empty() {
            return Err(usage("--estimators is empty"));
        }
        if let Some(e) = self.estimators.iter().find(|e| !CURVE_ESTIMATORS.contains(&e.as_str())) {
            return Err(usage(format!("unknown estimator '{e}', expected one of {}", CURVE_ESTIMATORS.join(", "))));
        }
        Ok(())
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ReldiffArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n_trials: u64,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
}

impl ReldiffArgs {
    pub fn validate(&self) -> Result<(), CliError> {
        check_trials(self.n_trials)?;
        check_beta("--beta", self.beta)
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BetaScanArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n_trials: u64,
    #[arg(long, value_enum, default_value = "bayes")]
    pub family: FamilyArg,
    #[arg(long, default_value = "b2")]
    pub loss: LossKind,
    #[arg(long, default_value_t = 0.05)]
    pub beta_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub beta_max: f64,
    /// β grid points.
    #[arg(long, default_value_t = 196)]
    pub resolution: usize,
    /// Also write the (β, max risk) curve as CSV here.
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

impl BetaScanArgs {
    pub fn validate(&self) -> Result<(), CliError> {
        check_trials(self.n_trials)?;
        check_beta("--beta-min", self.beta_min)?;
        check_beta("--beta-max", self.beta_max)?;
        if self.beta_max <= self.beta_min {
            return Err(usage("--beta-max must exceed --beta-min"));
        }
        if self.resolution < 3 {
            return Err(usage("--resolution must be at least 3"));
        }
        Ok(())
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct LfpArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n_trials: u64,
    #[arg(long, default_value = "b2")]
    pub loss: LossKind,
    /// Relative gap |avg − max| / avg at which to stop.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Weight of each added support point.
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long, default_value_t = 50)]
    pub max_iters: usize,
    /// Nelder–Mead starts per inner step.
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    /// Starting prior JSON: {"support": [...], "weights": [...]}.
    #[arg(long)]
    pub init_file: Option<PathBuf>,
}

impl LfpArgs {
    pub fn validate(&self) -> Result<(), CliError> {
        check_trials(self.n_trials)?;
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(usage("--tol must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(usage("--alpha must lie in (0, 1)"));
        }
        if self.max_iters == 0 || self.restarts == 0 {
            return Err(usage("--max-iters and --restarts must be positive"));
        }
        Ok(())
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CompareArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n_trials: u64,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
}

impl CompareArgs {
    pub fn validate(&self) -> Result<(), CliError> {
        check_trials(self.n_trials)?;
        check_beta("--beta", self.beta)
    }
}
