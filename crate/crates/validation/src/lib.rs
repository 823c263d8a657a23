//! Acceptance criteria as plain functions. Each one fills a [`Check`] with
//! failed conditions and a short summary of the numbers it looked at;
//! [`run_all`] evaluates every criterion and reports one line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use bhatt_cli::args::{CompareArgs, RiskCurveArgs};
use bhatt_cli::commands::{cmd_compare, cmd_risk_curve, Report, RunConfig};
use bhatt_core::risk::RiskProfile;
use bhatt_core::{
    bayes_b1, bayes_b2, bayes_estimator_for_discrete_prior, bayes_risk, beta_scan, bhattacharyya,
    default_initial_prior, estimator_table, kempthorne, loss, max_risk, posterior_risk, posterior_update,
    relative_suboptimality, top_eigenpair, BetaScanConfig, DirichletPosterior, DiscretePrior, EstimatorFamily,
    EstimatorKind, EstimatorTable, Exec, KempthorneConfig, LossKind, ParticlePosterior, PosteriorMoments, Prior,
    ProbVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

const L1: LossKind = LossKind::OneMinusB;
const L2: LossKind = LossKind::OneMinusBSquared;

/// Collects failed conditions and a short summary of the key numbers.
#[derive(Debug, Default)]
pub struct Check {
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

impl Check {
    pub fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

fn grid_argmin(post: &DirichletPosterior, l: LossKind) -> f64 {
    let mut best = (0.0, f64::INFINITY);
    for i in 0..10_000 {
        let q0 = i as f64 / 9_999.0;
        let r = posterior_risk(post, &ProbVector::binary(q0).unwrap(), l).unwrap();
        if r < best.1 {
            best = (q0, r);
        }
    }
    best.0
}

pub fn bayes_optimality(c: &mut Check) {
    let mut worst: f64 = 0.0;
    for beta in [0.5, 1.0] {
        for n in 0..=10 {
            let post = posterior_update(beta, 10, n).unwrap();
            let d2 = (bayes_b2(&post).unwrap()[0] - grid_argmin(&post, L2)).abs();
            let d1 = (bayes_b1(&post).unwrap()[0] - grid_argmin(&post, L1)).abs();
            worst = worst.max(d1).max(d2);
            c.require(d2 < 1e-3, format!("b2 beta={beta} n={n} off by {d2:.2e}"));
            c.require(d1 < 1e-3, format!("b1 beta={beta} n={n} off by {d1:.2e}"));
        }
    }
    c.note(format!("largest grid deviation {worst:.2e}"));
}

fn ln_mbeta(a: &[f64]) -> f64 {
    a.iter().map(|x| ln_gamma(*x)).sum::<f64>() - ln_gamma(a.iter().sum())
}

pub fn moment_fidelity(c: &mut Check) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let beta = rng.random_range(0.05..2.0);
        let n_trials = rng.random_range(1..=40u64);
        let n = rng.random_range(0..=n_trials);
        let (a, b) = (n as f64 + beta, (n_trials - n) as f64 + beta);
        let m = posterior_update(beta, n_trials, n).unwrap().moment_matrix();
        let base = ln_beta(a, b);
        let t = [
            (ln_beta(a + 1.0, b) - base).exp(),
            (ln_beta(a + 0.5, b + 0.5) - base).exp(),
            (ln_beta(a + 0.5, b + 0.5) - base).exp(),
            (ln_beta(a, b + 1.0) - base).exp(),
        ];
        for (x, y) in m.as_slice().iter().zip(t) {
            worst = worst.max((x - y).abs());
        }
    }
    c.require(worst <= 1e-12, format!("beta-function form off by {worst:.2e}"));

    let mut worst_z: f64 = 0.0;
    for alpha in [vec![3.5, 7.5], vec![1.0, 2.5, 0.7], vec![0.5, 4.0, 1.5, 2.0]] {
        let k = alpha.len();
        let post = DirichletPosterior::new(alpha.clone()).unwrap();
        let exact = post.moment_matrix();
        let base = ln_mbeta(&alpha);
        for i in 0..k {
            for j in 0..k {
                let mut s = alpha.clone();
                s[i] += 0.5;
                s[j] += 0.5;
                let d = (exact.get(i, j) - (ln_mbeta(&s) - base).exp()).abs();
                c.require(d <= 1e-12, format!("K={k} entry ({i},{j}) off by {d:.2e}"));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        let (mut sum, mut sq) = (vec![0.0; k * k], vec![0.0; k * k]);
        let draws = 1_000_000;
        for _ in 0..draws {
            let r = post.sample(&mut rng).sqrt();
            for i in 0..k {
                for j in 0..k {
                    let x = r[i] * r[j];
                    sum[i * k + j] += x;
                    sq[i * k + j] += x * x;
                }
            }
        }
        let nd = draws as f64;
        for idx in 0..k * k {
            let mean = sum[idx] / nd;
            let se = ((sq[idx] / nd - mean * mean).max(0.0) / nd).sqrt().max(1e-15);
            let z = (mean - exact.as_slice()[idx]).abs() / se;
            worst_z = worst_z.max(z);
            c.require(z <= 4.0, format!("K={k} entry {idx} is {z:.2} standard errors off"));
        }
    }
    c.note(format!("closed form vs beta functions {worst:.1e}, Monte Carlo worst {worst_z:.2} SE"));
}

fn relative_gaps(beta: f64, n_trials: u64) -> Vec<f64> {
    (0..=n_trials).map(|n| relative_suboptimality(&posterior_update(beta, n_trials, n).unwrap()).unwrap()).collect()
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn relative_suboptimality_bound(c: &mut Check) {
    for beta in [0.5, 1.0] {
        let at10 = relative_gaps(beta, 10);
        let at40 = relative_gaps(beta, 40);
        let (m10, m40) = (max_of(&at10), max_of(&at40));
        let arg = at10.iter().position(|v| *v == m10).unwrap();
        c.require(m10 < 1e-3, format!("beta={beta} N=10 max {m10:.4e} at n={arg}"));
        c.require(m40 < m10, format!("beta={beta} max {m40:.4e} at N=40 is not below {m10:.4e} at N=10"));
        c.note(format!("beta={beta}: max N=10 {m10:.4e}, N=40 {m40:.4e}"));
    }
}

pub fn scan_reproduction(c: &mut Check) {
    let cfg = BetaScanConfig::default();
    let bayes10 = beta_scan(10, L2, EstimatorFamily::Bayes, &cfg).unwrap().beta_star;
    let mean10 = beta_scan(10, L2, EstimatorFamily::Mean, &cfg).unwrap().beta_star;
    c.require((0.42..=0.46).contains(&bayes10), format!("bayes beta* {bayes10:.4}"));
    c.require((0.24..=0.28).contains(&mean10), format!("mean beta* {mean10:.4}"));
    let stars: Vec<f64> =
        [5u64, 10, 20, 40].iter().map(|n| beta_scan(*n, L2, EstimatorFamily::Bayes, &cfg).unwrap().beta_star).collect();
    let spread = max_of(&stars) - stars.iter().copied().fold(f64::INFINITY, f64::min);
    c.require(spread < 0.05, format!("beta* spread {spread:.4}"));
    c.note(format!("beta* bayes {bayes10:.4}, mean {mean10:.4}; N=5,10,20,40 -> {stars:.4?}, spread {spread:.4}"));
}

pub fn kempthorne_duality(c: &mut Check) {
    for n_trials in [1u64, 2, 5, 10] {
        let cfg = KempthorneConfig::new(n_trials, L2);
        let init = default_initial_prior(n_trials, L2, &BetaScanConfig::default(), cfg.merge_tol).unwrap();
        let r = kempthorne(&cfg, &init).unwrap();
        c.require(r.converged && r.diff <= 1e-3, format!("N={n_trials} not converged, diff {:.3e}", r.diff));
        for (i, h) in r.history.iter().enumerate() {
            c.require(h.avg_risk <= h.max_risk + 1e-9, format!("N={n_trials} iteration {} avg > max", i + 1));
        }
        let scan = beta_scan(n_trials, L2, EstimatorFamily::Bayes, &BetaScanConfig::default()).unwrap();
        c.require(
            r.max_risk <= scan.max_risk_star + 1e-3 * r.avg_risk,
            format!("N={n_trials} max risk {:.6} above scan {:.6}", r.max_risk, scan.max_risk_star),
        );
        if n_trials == 10 {
            let t = estimator_table(EstimatorKind::BayesB2 { prior_beta: 0.44 }, 10).unwrap();
            let conj = bayes_risk(&Prior::Conjugate { beta: 0.44 }, &t, L2).unwrap();
            c.require(r.avg_risk >= conj, format!("LFP Bayes risk {:.6} below conjugate {conj:.6}", r.avg_risk));
        }
        c.note(format!("N={n_trials}: {} iters, minimax {:.7}, diff {:.1e}", r.outer_iters, r.max_risk, r.diff));
    }
}

fn random_particles(rng: &mut ChaCha8Rng, k: usize) -> ParticlePosterior {
    let m = rng.random_range(1..=5);
    let points = (0..m)
        .map(|_| {
            let v: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-9).collect();
            let s: f64 = v.iter().sum();
            ProbVector::new(v.iter().map(|x| x / s).collect()).unwrap()
        })
        .collect();
    ParticlePosterior::from_unnormalized(points, (0..m).map(|_| rng.random_range(0.01..1.0)).collect()).unwrap()
}

fn random_table(rng: &mut ChaCha8Rng, n_trials: u64) -> EstimatorTable {
    let rows = (0..=n_trials).map(|_| ProbVector::binary(rng.random::<f64>()).unwrap()).collect();
    EstimatorTable::from_rows("random", rows).unwrap()
}

pub fn property_suites(c: &mut Check) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..1000 {
        let k = rng.random_range(2..=8);
        let alpha: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..30.0)).collect();
        let dir = DirichletPosterior::new(alpha).unwrap();
        let parts = random_particles(&mut rng, k);
        for est in
            [bayes_b1(&dir).unwrap(), bayes_b2(&dir).unwrap(), bayes_b1(&parts).unwrap(), bayes_b2(&parts).unwrap()]
        {
            let s: f64 = est.as_slice().iter().sum();
            c.require(
                (s - 1.0).abs() <= 1e-14 && est.as_slice().iter().all(|x| *x >= 0.0),
                "estimate left the simplex",
            );
        }
        let m = parts.moment_matrix();
        let top = top_eigenpair(m.as_slice(), k).unwrap();
        c.require(top.vector.iter().all(|x| *x >= 0.0), "negative Perron entry");
        for i in 0..k {
            let mv: f64 = (0..k).map(|j| m.get(i, j) * top.vector[j]).sum();
            c.require((mv - top.value * top.vector[i]).abs() <= 1e-11, "eigen residual above 1e-11");
        }
        let (p, q) = (dir.posterior_mean(), parts.posterior_mean());
        let (b, b_rev) = (bhattacharyya(&p, &q).unwrap(), bhattacharyya(&q, &p).unwrap());
        c.require(b == b_rev && (0.0..=1.0).contains(&b), "B asymmetric or out of bounds");
        c.require((bhattacharyya(&p, &p).unwrap() - 1.0).abs() < 1e-12, "B(p, p) != 1");
    }

    for (alpha, seed) in [(vec![2.0, 5.0], 61u64), (vec![0.7, 1.3, 2.2], 62)] {
        let post = DirichletPosterior::new(alpha).unwrap();
        let q = ProbVector::uniform(post.dim()).unwrap();
        for l in [L1, L2] {
            let exact = posterior_risk(&post, &q, l).unwrap();
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let (mut s, mut s2) = (0.0, 0.0);
            let draws = 1_000_000;
            for _ in 0..draws {
                let x = loss(l, &post.sample(&mut r), &q).unwrap();
                s += x;
                s2 += x * x;
            }
            let mean = s / draws as f64;
            let se = ((s2 / draws as f64 - mean * mean) / draws as f64).sqrt();
            c.require((mean - exact).abs() <= 4.0 * se, format!("{l} posterior risk {exact} vs sampled {mean}"));
        }
    }

    let mut worst_gap = f64::INFINITY;
    for i in 0..50 {
        let n_trials = rng.random_range(1..=12);
        let l = if i % 2 == 0 { L1 } else { L2 };
        let m = rng.random_range(1..=5);
        let mu = DiscretePrior::from_unnormalized(
            (0..m).map(|_| rng.random::<f64>()).collect(),
            (0..m).map(|_| rng.random_range(0.05..1.0)).collect(),
        )
        .unwrap();
        let lower =
            bayes_risk(&Prior::Discrete(mu.clone()), &bayes_estimator_for_discrete_prior(&mu, n_trials, l).unwrap(), l)
                .unwrap();
        let upper = max_risk(&random_table(&mut rng, n_trials), l).unwrap().value;
        worst_gap = worst_gap.min(upper - lower);
        c.require(lower <= upper + 1e-9, format!("sandwich broken for pair {i}"));
    }
    c.note(format!("smallest sandwich gap {worst_gap:.3e}"));
}

fn parse_csv(r: &Report) -> Vec<Vec<f64>> {
    r.body.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

pub fn figure_smoke(c: &mut Check) {
    let run = RunConfig::default();
    let compare = CompareArgs { n_trials: 10, beta: 0.5 };
    let cmp = cmd_compare(&compare, &run).unwrap();
    for row in parse_csv(&cmp) {
        if row[0] == 5.0 {
            continue;
        }
        let (mle, mean, b2) = (row[1], row[2], row[3]);
        c.require(
            (b2 - mle) * (mean - mle) > 0.0 && (b2 - mle).abs() < (mean - mle).abs(),
            format!("n={} bayes_b2 not between MLE and mean", row[0]),
        );
    }

    let curve = RiskCurveArgs {
        n_trials: 10,
        beta: 0.5,
        loss: L2,
        estimators: vec!["mle".into(), "mean".into(), "bayes".into()],
        grid: 501,
    };
    let rc = cmd_risk_curve(&curve, &run).unwrap();
    let rows = parse_csv(&rc);
    let col_max = |i: usize| rows.iter().map(|r| r[i]).fold(f64::NEG_INFINITY, f64::max);
    let exact_bayes = max_risk(&estimator_table(EstimatorKind::BayesB2 { prior_beta: 0.5 }, 10).unwrap(), L2).unwrap();
    let exact_mle = max_risk(&estimator_table(EstimatorKind::Mle, 10).unwrap(), L2).unwrap();
    c.require(col_max(3) < col_max(1), "bayes column max not below MLE column max");
    c.require(exact_bayes.value < exact_mle.value, "bayes max risk not below MLE max risk");
    c.note(format!("max risk bayes {:.5} vs mle {:.5}", exact_bayes.value, exact_mle.value));

    let seq = RunConfig { exec: Exec::Sequential, ..run };
    c.require(cmd_compare(&compare, &run).unwrap() == cmp, "compare output changed between runs");
    c.require(cmd_risk_curve(&curve, &run).unwrap() == rc, "risk-curve output changed between runs");
    c.require(cmd_risk_curve(&curve, &seq).unwrap() == rc, "risk-curve output depends on strategy");
    let p = RiskProfile::new(&estimator_table(EstimatorKind::Mle, 10).unwrap(), L2);
    c.require(rows.iter().step_by(37).all(|r| (p.eval(r[0]) - r[1]).abs() < 1e-12), "CSV does not round-trip");
}

pub type Criterion = (&'static str, Duration, fn(&mut Check));

#[derive(Debug)]
pub struct Outcome {
    pub name: &'static str,
    pub passed: bool,
    pub elapsed: Duration,
    pub line: String,
}

/// Criteria in order, with their runtime limits.
pub fn criteria() -> [Criterion; 7] {
    [
        ("Bayes-optimality oracle", Duration::from_secs(10), bayes_optimality),
        ("moment-matrix fidelity", Duration::from_secs(120), moment_fidelity),
        ("relative suboptimality", Duration::from_secs(5), relative_suboptimality_bound),
        ("beta-scan reproduction", Duration::from_secs(120), scan_reproduction),
        ("Kempthorne convergence and duality", Duration::from_secs(600), kempthorne_duality),
        ("property suites", Duration::from_secs(60), property_suites),
        ("figure-reproduction smoke", Duration::from_secs(120), figure_smoke),
    ]
}

/// Runs one criterion, turning panics and overruns into failures.
pub fn evaluate(index: usize, (name, limit, body): Criterion) -> Outcome {
    let start = Instant::now();
    let mut check = Check::default();
    if let Err(e) = catch_unwind(AssertUnwindSafe(|| body(&mut check))) {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        check.failures.push(format!("panicked: {msg}"));
    }
    let elapsed = start.elapsed();
    check.require(elapsed < limit, format!("took {elapsed:.1?}, limit {limit:?}"));
    let passed = check.failures.is_empty();
    let mut detail = check.notes.join("; ");
    if !passed {
        let shown: Vec<&String> = check.failures.iter().take(4).collect();
        let more = check.failures.len().saturating_sub(4);
        let tail = if more > 0 { format!(" (+{more} more)") } else { String::new() };
        detail = format!("{detail}; failed: {shown:?}{tail}");
    }
    let line =
        format!("criterion {} {name}: {} [{elapsed:.2?}] {detail}", index + 1, if passed { "PASS" } else { "FAIL" });
    Outcome { name, passed, elapsed, line }
}

/// Evaluates every criterion, printing each line as soon as it is known.
pub fn run_all() -> Vec<Outcome> {
    criteria()
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let o = evaluate(i, c);
            println!("{}", o.line);
            o
        })
        .collect()
}
