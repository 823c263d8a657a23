use std::path::Path;
use std::process::Command as Process;

use bhatt_cli::{run, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE};
use bhatt_core::{estimator_table, pointwise_risk, EstimatorKind, LossKind};
use serde_json::Value;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn bhatt(args: &[&str]) -> Outcome {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("bhatt").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Outcome { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn json(args: &[&str]) -> Value {
    let o = bhatt(args);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    serde_json::from_str(&o.stdout).unwrap()
}

fn csv(args: &[&str]) -> (Vec<String>, Vec<Vec<f64>>) {
    let o = bhatt(args);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let mut lines = o.stdout.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn column(rows: &[Vec<f64>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i]).collect()
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn first_two(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

#[test]
fn estimate_examples() {
    let v = json(&["estimate", "--n", "5", "--N", "10", "--beta", "1", "--loss", "b2", "--estimator", "bayes"]);
    let (a, b) = first_two(&v["estimate"]);
    assert!((a - 0.5).abs() < 1e-12 && (b - 0.5).abs() < 1e-12);
    assert!(v["posterior_risk"].as_f64().unwrap() > 0.0);
    assert_eq!(v["meta"]["command"], "estimate");
    assert_eq!(v["meta"]["seed"], 0);
    assert_eq!(v["meta"]["version"], bhatt_core::VERSION);

    let v = json(&["estimate", "--n", "3", "--N", "10", "--beta", "0.5", "--loss", "b2", "--estimator", "mean"]);
    let (a, b) = first_two(&v["estimate"]);
    assert!((a - 3.5 / 11.0).abs() < 1e-15 && (b - 7.5 / 11.0).abs() < 1e-15);

    let v = json(&["estimate", "--n", "0", "--N", "4", "--estimator", "mle"]);
    assert_eq!(first_two(&v["estimate"]), (0.0, 1.0));
}

#[test]
fn estimate_from_particle_file() {
    let dir = tempfile::tempdir().unwrap();
    let pm = dir.path().join("pm.json");
    std::fs::write(&pm, r#"{"points": [[0.2, 0.8]], "weights": [1.0]}"#).unwrap();
    let v = json(&["estimate", "--posterior-file", pm.to_str().unwrap(), "--loss", "b"]);
    let (a, b) = first_two(&v["estimate"]);
    assert!((a - 0.2).abs() < 1e-12 && (b - 0.8).abs() < 1e-12);
    assert_eq!(v["posterior"]["kind"], "particle");
    assert!(v["posterior_risk"].as_f64().unwrap() < 1e-12);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"points": [[0.2, 0.8]], "weights": [0.5]}"#).unwrap();
    let o = bhatt(&["estimate", "--posterior-file", bad.to_str().unwrap()]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(!o.stderr.is_empty());
    let missing = dir.path().join("missing.json");
    assert_eq!(bhatt(&["estimate", "--posterior-file", missing.to_str().unwrap()]).code, EXIT_USAGE);
    assert_eq!(bhatt(&["estimate", "--posterior-file", pm.to_str().unwrap(), "--estimator", "mle"]).code, EXIT_USAGE);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["estimate", "--n", "11", "--N", "10"],
        vec!["estimate", "--N", "10"],
        vec!["estimate", "--n", "1", "--N", "10", "--beta", "-1"],
        vec!["estimate", "--n", "1", "--N", "10", "--loss", "kl"],
        vec!["risk-curve", "--N", "10", "--grid", "1"],
        vec!["risk-curve", "--N", "10", "--estimators", "mle,median"],
        vec!["risk-curve", "--N", "0"],
        vec!["beta-scan", "--N", "10", "--beta-min", "1", "--beta-max", "0.5"],
        vec!["lfp", "--N", "2", "--alpha", "1.5"],
        vec!["lfp", "--N", "2", "--tol", "0"],
        vec!["frobnicate"],
        vec![],
    ] {
        let o = bhatt(&args);
        assert_eq!(o.code, EXIT_USAGE, "{args:?}");
        assert!(o.stdout.is_empty(), "{args:?}");
    }
    assert_eq!(bhatt(&["--help"]).code, EXIT_OK);
}

#[test]
fn risk_curve_examples() {
    let (header, rows) = csv(&["risk-curve", "--N", "10", "--beta", "0.5", "--estimators", "mle,mean,bayes"]);
    assert_eq!(header, ["p0", "mle", "mean", "bayes"]);
    assert_eq!(rows.len(), 501);
    assert!(rows.iter().all(|r| r.len() == 4));
    assert!(max(&column(&rows, 3)) < max(&column(&rows, 1)));

    let (_, rows) = csv(&["risk-curve", "--N", "10", "--grid", "3"]);
    assert_eq!(column(&rows, 0), [0.0, 0.5, 1.0]);

    // mean and Bayes curves nearly coincide away from the corners; at
    // p0 = 0 the gap is exactly 1/12 - bayes(0)
    let (_, rows) = csv(&["risk-curve", "--N", "10", "--beta", "1"]);
    for r in rows.iter().filter(|r| (0.05..=0.95).contains(&r[0])) {
        assert!((r[2] - r[3]).abs() < 0.01, "p0={}", r[0]);
    }
    let b2 = estimator_table(EstimatorKind::BayesB2 { prior_beta: 1.0 }, 10).unwrap().row(0)[0];
    assert!((rows[0][2] - rows[0][3] - (1.0 / 12.0 - b2)).abs() < 1e-12);
}

#[test]
fn csv_round_trips() {
    let (_, rows) = csv(&["risk-curve", "--N", "7", "--beta", "0.3", "--loss", "b", "--estimators", "bayes_b1,mle"]);
    let table = estimator_table(EstimatorKind::BayesB1 { prior_beta: 0.3 }, 7).unwrap();
    for r in rows.iter().step_by(50) {
        let again = pointwise_risk(r[0], &table, LossKind::OneMinusB).unwrap();
        assert!((again - r[1]).abs() < 1e-12);
    }
}

#[test]
fn reldiff_table() {
    let (header, rows) = csv(&["reldiff", "--N", "10", "--beta", "0.5"]);
    assert_eq!(header, ["n", "relative_suboptimality"]);
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[5][1], 0.0);
    for n in 0..11 {
        assert_eq!(rows[n][0], n as f64);
        assert!(rows[n][1] >= 0.0);
        assert_eq!(rows[n][1], rows[10 - n][1]);
    }
    // largest at the extreme outcomes
    assert!((rows[0][1] - 0.0996197).abs() < 1e-6);
}

#[test]
fn compare_examples() {
    let (header, rows) = csv(&["compare", "--N", "10", "--beta", "0.5"]);
    assert_eq!(header, ["n", "mle", "mean", "bayes_b2", "bayes_b1"]);
    assert_eq!(rows.len(), 11);
    for r in &rows {
        if r[0] == 5.0 {
            continue;
        }
        let (mle, mean, b2) = (r[1], r[2], r[3]);
        assert!((b2 - mle) * (mean - mle) > 0.0 && (b2 - mle).abs() < (mean - mle).abs());
    }
    let (_, rows) = csv(&["compare", "--N", "10", "--beta", "1"]);
    assert!(rows[5][2..].iter().all(|x| (x - 0.5).abs() < 1e-12));
    let r0 = &rows[0];
    assert!(r0[1] == 0.0 && r0[3] > 0.0 && r0[3] < r0[2]);
    assert!((r0[2] - 1.0 / 12.0).abs() < 1e-15);
}

#[test]
fn beta_scan_writes_curve() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.csv");
    let v = json(&["beta-scan", "--N", "10", "--family", "bayes", "--curve", curve.to_str().unwrap()]);
    let b = v["beta_star"].as_f64().unwrap();
    assert!((0.42..=0.46).contains(&b));
    assert!(v["max_risk"].as_f64().unwrap() > 0.0);
    assert_eq!(v["meta"]["params"]["beta_min"], 0.05);
    let text = std::fs::read_to_string(curve).unwrap();
    assert_eq!(text.lines().next(), Some("beta,max_risk"));
    assert_eq!(text.lines().count(), 197);

    let v = json(&["beta-scan", "--N", "10", "--family", "mean"]);
    assert!((0.24..=0.28).contains(&v["beta_star"].as_f64().unwrap()));
}

#[test]
fn lfp_single_trial() {
    let v = json(&["lfp", "--N", "1", "--seed", "7"]);
    assert_eq!(v["converged"], true);
    assert!(v["diff"].as_f64().unwrap() <= 1e-3);
    assert_eq!(v["meta"]["seed"], 7);
    let support: Vec<f64> = serde_json::from_value(v["support"].clone()).unwrap();
    let weights: Vec<f64> = serde_json::from_value(v["weights"].clone()).unwrap();
    assert_eq!(support.len(), weights.len());
    assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn lfp_init_file_and_loose_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let init = dir.path().join("init.json");
    std::fs::write(&init, r#"{"support": [0.0, 0.5, 1.0], "weights": [0.25, 0.5, 0.25]}"#).unwrap();
    let v = json(&["lfp", "--N", "1", "--tol", "0.5", "--init-file", init.to_str().unwrap()]);
    assert_eq!(v["iters"], 1);
    assert_eq!(v["converged"], true);

    std::fs::write(&init, r#"{"support": [0.0, 1.5], "weights": [0.5, 0.5]}"#).unwrap();
    assert_eq!(bhatt(&["lfp", "--N", "1", "--init-file", init.to_str().unwrap()]).code, EXIT_USAGE);
}

#[test]
fn lfp_iteration_cap_exits_4_with_result() {
    let o = bhatt(&["lfp", "--N", "10", "--max-iters", "1"]);
    assert_eq!(o.code, EXIT_NOT_CONVERGED);
    let v: Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(v["converged"], false);
    assert!(v["avg_risk"].as_f64().unwrap() <= v["max_risk"].as_f64().unwrap());
    assert!(!o.stderr.is_empty());
}

#[test]
fn outputs_are_byte_stable() {
    for args in [
        vec!["compare", "--N", "10", "--beta", "0.5"],
        vec!["risk-curve", "--N", "10", "--beta", "0.5"],
        vec!["reldiff", "--N", "10", "--beta", "1"],
        vec!["beta-scan", "--N", "5"],
        vec!["lfp", "--N", "2", "--seed", "3"],
        vec!["estimate", "--n", "2", "--N", "9", "--loss", "b"],
    ] {
        let a = bhatt(&args).stdout;
        let b = bhatt(&args).stdout;
        let mut seq = args.clone();
        seq.push("--sequential");
        let c = bhatt(&seq).stdout;
        assert_eq!(a, b, "{args:?}");
        // metadata does not record the strategy, so the bytes match too
        assert_eq!(a, c, "{args:?}");
    }
}

fn binary() -> Process {
    Process::new(env!("CARGO_BIN_EXE_bhatt"))
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let st = binary().args(["beta-scan", "--N", "4"]).env(bhatt_cli::OUT_DIR_ENV, dir.path()).output().unwrap();
    assert!(st.status.success());
    assert!(st.stdout.is_empty());
    assert!(read(&dir.path().join("beta-scan.json")).contains("beta_star"));
    assert!(read(&dir.path().join("beta-scan-curve.csv")).starts_with("beta,max_risk\n"));

    // the flag wins over the environment
    let explicit = dir.path().join("mine.csv");
    let st = binary()
        .args(["compare", "--N", "3", "--out", explicit.to_str().unwrap()])
        .env(bhatt_cli::OUT_DIR_ENV, dir.path())
        .output()
        .unwrap();
    assert!(st.status.success());
    assert!(read(&explicit).starts_with("n,mle,mean,bayes_b2,bayes_b1\n"));
    assert!(!dir.path().join("compare.csv").exists());
}

#[test]
fn binary_exit_codes() {
    let st = binary().args(["estimate", "--n", "3"]).output().unwrap();
    assert_eq!(st.status.code(), Some(EXIT_USAGE));
    let st = binary().args(["compare", "--N", "2"]).env_remove(bhatt_cli::OUT_DIR_ENV).output().unwrap();
    assert_eq!(st.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8(st.stdout).unwrap().starts_with("n,mle"));
}
