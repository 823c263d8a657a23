//! One function per subcommand. Each validates its arguments, computes, and
//! returns the rendered output; writing it anywhere is the caller's job.

use std::fmt::Write as _;
use std::path::Path;

use bhatt_core::{
    bayes_estimate, beta_scan, default_initial_prior, estimator_table, kempthorne, mle, posterior_risk,
    posterior_update, relative_suboptimality, risk_curve, BetaScanConfig, DiscretePrior, EstimatorFamily,
    EstimatorKind, Exec, KempthorneConfig, MaxRiskConfig, ParticlePosterior, Posterior, PosteriorMoments, VERSION,
};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{
    BetaScanArgs, CompareArgs, EstimateArgs, EstimatorArg, FamilyArg, LfpArgs, ReldiffArgs, RiskCurveArgs,
};
use crate::error::{CliError, EXIT_NOT_CONVERGED, EXIT_OK};

/// Settings shared by every command.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunConfig {
    pub seed: u64,
    pub exec: Exec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub format: Format,
    pub body: String,
    /// Secondary CSV output (the beta-scan curve).
    pub curve: Option<String>,
    pub converged: bool,
}

impl Report {
    fn new(command: &'static str, format: Format, body: String) -> Self {
        Report { command, format, body, curve: None, converged: true }
    }

    pub fn exit_code(&self) -> i32 {
        if self.converged {
            EXIT_OK
        } else {
            EXIT_NOT_CONVERGED
        }
    }
}

/// 17 significant digits, so every value round-trips.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn meta<A: Serialize>(command: &str, params: &A, run: &RunConfig) -> Value {
    json!({
        "command": command,
        "params": params,
        "seed": run.seed,
        "version": VERSION,
    })
}

fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid {}: {e}", path.display())))
}

pub fn cmd_estimate(args: &EstimateArgs, run: &RunConfig) -> Result<Report, CliError> {
    args.validate()?;
    let (posterior, estimate) = match &args.posterior_file {
        Some(path) => {
            let post: ParticlePosterior = read_json(path)?;
            let est = match args.estimator {
                EstimatorArg::Bayes => bayes_estimate(&post, args.loss)?,
                EstimatorArg::Mean => post.posterior_mean(),
                EstimatorArg::Mle => unreachable!("rejected by validate"),
            };
            (Posterior::from(post), est)
        }
        None => {
            let (n, total) = (args.successes.unwrap_or(0), args.n_trials.unwrap_or(0));
            let post = posterior_update(args.beta, total, n)?;
            let est = match args.estimator {
                EstimatorArg::Bayes => bayes_estimate(&post, args.loss)?,
                EstimatorArg::Mean => post.posterior_mean(),
                EstimatorArg::Mle => mle(n, total)?,
            };
            (Posterior::from(post), est)
        }
    };
    let risk = posterior_risk(&posterior, &estimate, args.loss)?;
    let doc = json!({
        "estimate": estimate,
        "estimator": args.estimator,
        "loss": args.loss.token(),
        "posterior": posterior,
        "posterior_risk": risk,
        "meta": meta("estimate", args, run),
    });
    Ok(Report::new("estimate", Format::Json, render_json(&doc)))
}

fn curve_kind(name: &str, args: &RiskCurveArgs) -> EstimatorKind {
    let beta = args.beta;
    match name {
        "mle" => EstimatorKind::Mle,
        "mean" => EstimatorKind::PosteriorMean { prior_beta: beta },
        "bayes" => EstimatorKind::bayes(args.loss, beta),
        "bayes_b1" => EstimatorKind::BayesB1 { prior_beta: beta },
        "bayes_b2" => EstimatorKind::BayesB2 { prior_beta: beta },
        other => unreachable!("estimator '{other}' rejected by validate"),
    }
}

pub fn cmd_risk_curve(args: &RiskCurveArgs, run: &RunConfig) -> Result<Report, CliError> {
    args.validate()?;
    let mut columns = Vec::with_capacity(args.estimators.len());
    let mut grid = Vec::new();
    for name in &args.estimators {
        let table = estimator_table(curve_kind(name, args), args.n_trials)?;
        let curve = risk_curve(&table, args.loss, args.grid, run.exec)?;
        grid = curve.iter().map(|c| c.0).collect();
        columns.push(curve.into_iter().map(|c| c.1).collect::<Vec<f64>>());
    }
    let mut out = format!("p0,{}\n", args.estimators.join(","));
    for (i, p0) in grid.iter().enumerate() {
        out.push_str(&fmt_f64(*p0));
        for col in &columns {
            write!(out, ",{}", fmt_f64(col[i])).unwrap();
        }
        out.push('\n');
    }
    Ok(Report::new("risk-curve", Format::Csv, out))
}

pub fn cmd_reldiff(args: &ReldiffArgs, _run: &RunConfig) -> Result<Report, CliError> {
    args.validate()?;
    let mut out = String::from("n,relative_suboptimality\n");
    for n in 0..=args.n_trials {
        let r = relative_suboptimality(&posterior_update(args.beta, args.n_trials, n)?)?;
        writeln!(out, "{n},{}", fmt_f64(r)).unwrap();
    }
    Ok(Report::new("reldiff", Format::Csv, out))
}

fn scan_config(run: &RunConfig) -> BetaScanConfig {
    BetaScanConfig {
        exec: run.exec,
        max_risk: MaxRiskConfig { exec: run.exec, ..Default::default() },
        ..Default::default()
    }
}

pub fn cmd_beta_scan(args: &BetaScanArgs, run: &RunConfig) -> Result<Report, CliError> {
    args.validate()?;
    let cfg = BetaScanConfig {
        beta_min: args.beta_min,
        beta_max: args.beta_max,
        resolution: args.resolution,
        ..scan_config(run)
    };
    let family = match args.family {
        FamilyArg::Bayes => EstimatorFamily::Bayes,
        FamilyArg::Mean => EstimatorFamily::Mean,
    };
    let scan = beta_scan(args.n_trials, args.loss, family, &cfg)?;
    let doc = json!({
        "beta_star": scan.beta_star,
        "max_risk": scan.max_risk_star,
        "estimator": family.kind(args.loss, scan.beta_star).to_string(),
        "meta": meta("beta-scan", args, run),
    });
    let mut curve = String::from("beta,max_risk\n");
    for (b, r) in &scan.curve {
        writeln!(curve, "{},{}", fmt_f64(*b), fmt_f64(*r)).unwrap();
    }
    let mut report = Report::new("beta-scan", Format::Json, render_json(&doc));
    report.curve = Some(curve);
    Ok(report)
}

pub fn cmd_lfp(args: &LfpArgs, run: &RunConfig) -> Result<Report, CliError> {
    args.validate()?;
    let mut cfg = KempthorneConfig::new(args.n_trials, args.loss);
    cfg.tol = args.tol;
    cfg.alpha_mix = args.alpha;
    cfg.max_outer_iters = args.max_iters;
    cfg.restarts = args.restarts;
    cfg.seed = run.seed;
    cfg.exec = run.exec;
    cfg.max_risk.exec = run.exec;
    let init: DiscretePrior = match &args.init_file {
        Some(path) => read_json(path)?,
        None => default_initial_prior(args.n_trials, args.loss, &scan_config(run), cfg.merge_tol)?,
    };
    let result = kempthorne(&cfg, &init)?;
    let doc = json!({
        "support": result.prior.support(),
        "weights": result.prior.weights(),
        "avg_risk": result.avg_risk,
        "max_risk": result.max_risk,
        "diff": result.diff,
        "converged": result.converged,
        "iters": result.outer_iters,
        "estimator": result.table.first_components(),
        "history": result.history,
        "init": init,
        "meta": meta("lfp", args, run),
    });
    let mut report = Report::new("lfp", Format::Json, render_json(&doc));
    report.converged = result.converged;
    Ok(report)
}

pub fn cmd_compare(args: &CompareArgs, _run: &RunConfig) -> Result<Report, CliError> {
    args.validate()?;
    let beta = args.beta;
    let tables = [
        EstimatorKind::Mle,
        EstimatorKind::PosteriorMean { prior_beta: beta },
        EstimatorKind::BayesB2 { prior_beta: beta },
        EstimatorKind::BayesB1 { prior_beta: beta },
    ]
    .into_iter()
    .map(|k| estimator_table(k, args.n_trials))
    .collect::<Result<Vec<_>, _>>()?;
    let mut out = String::from("n,mle,mean,bayes_b2,bayes_b1\n");
    for n in 0..=args.n_trials as usize {
        out.push_str(&n.to_string());
        for t in &tables {
            write!(out, ",{}", fmt_f64(t.row(n)[0])).unwrap();
        }
        out.push('\n');
    }
    Ok(Report::new("compare", Format::Csv, out))
}
