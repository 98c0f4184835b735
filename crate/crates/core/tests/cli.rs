use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::DMatrix;
use rand::{rngs::StdRng, Rng, SeedableRng};
use serde_json::Value;
use tempfile::TempDir;

use mprsel::{fit_unpenalized, SolverConfig, SurvivalDataset};

fn mprsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mprsel")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "command failed: {}", stderr(o));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

// Weibull data: x1 acts on the scale, z1 on the shape, x2 is noise.
fn weibull_csv(dir: &TempDir, n: usize, seed: u64) -> PathBuf {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut body = String::from("id,time,status,x1,x2,z1\n");
    for i in 0..n {
        let (x1, x2, z1): (f64, f64, f64) =
            (rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        let tau = (0.2 + 0.9 * x1).exp();
        let gamma = (0.1 + 0.4 * z1).exp();
        let t = (-rng.random_range(f64::EPSILON..1.0f64).ln() / tau).powf(1.0 / gamma);
        let c = -rng.random_range(f64::EPSILON..1.0f64).ln() * 5.0;
        body.push_str(&format!("{i},{},{},{x1},{x2},{z1}\n", t.min(c), (t <= c) as u8));
    }
    write(dir, "data.csv", &body)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn intercept_only_fit_matches_the_library() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "tiny.csv", "time,status\n0.5,1\n1.5,1\n2.5,0\n");
    let report = json(&mprsel(&["fit", "--input", p(&input), "--format", "json"]));

    let data = SurvivalDataset::from_covariates(
        vec![0.5, 1.5, 2.5],
        vec![1.0, 1.0, 0.0],
        &DMatrix::zeros(3, 0),
        &DMatrix::zeros(3, 0),
    )
    .unwrap();
    let direct = fit_unpenalized(&data, None, &SolverConfig::default()).unwrap();
    let coefs = report["coefficients"].as_array().unwrap();
    assert_eq!(coefs.len(), 2);
    assert_eq!(coefs[0]["estimate"].as_f64().unwrap(), direct.theta_hat.beta[0]);
    assert_eq!(coefs[1]["estimate"].as_f64().unwrap(), direct.theta_hat.alpha[0]);
    assert_eq!(report["loglik"].as_f64().unwrap(), direct.loglik);
    assert_eq!(report["n_events"], 2);
}

#[test]
fn json_report_contract() {
    let dir = TempDir::new().unwrap();
    let input = weibull_csv(&dir, 200, 1);
    let report = json(&mprsel(&[
        "fit",
        "--input",
        p(&input),
        "--scale-covs",
        "x1,x2",
        "--shape-covs",
        "z1",
        "--penalty",
        "alasso",
        "--lambda",
        "0.05",
        "--format",
        "json",
    ]));
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["command"], "fit");
    for key in [
        "n",
        "n_events",
        "penalty",
        "tuning_mode",
        "lambda",
        "converged",
        "n_iter",
        "loglik",
        "penalized_loglik",
        "bic",
        "effective_df",
        "effective_df_scale",
        "effective_df_shape",
        "coefficients",
    ] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert!(report.get("selection").is_none());
    let names: Vec<(&str, &str)> = report["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["component"].as_str().unwrap(), c["name"].as_str().unwrap()))
        .collect();
    assert_eq!(
        names,
        [("scale", "(intercept)"), ("scale", "x1"), ("scale", "x2"), ("shape", "(intercept)"), ("shape", "z1")]
    );
    let df = report["effective_df"].as_f64().unwrap();
    let split = report["effective_df_scale"].as_f64().unwrap() + report["effective_df_shape"].as_f64().unwrap();
    assert!((df - split).abs() < 1e-9);
    assert!(df < 5.0);
}

#[test]
fn coefficient_csv_columns() {
    let dir = TempDir::new().unwrap();
    let input = weibull_csv(&dir, 150, 2);
    let out = mprsel(&["fit", "--input", p(&input), "--scale-covs", "x1", "--format", "csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "component,name,estimate,std_error,z,p_value,significant,selected,estimate_standardized,std_error_standardized"
    );
    assert_eq!(lines.count(), 3);
}

#[test]
fn select_reports_the_chosen_lambda() {
    let dir = TempDir::new().unwrap();
    let input = weibull_csv(&dir, 300, 3);
    let report = json(&mprsel(&[
        "select",
        "--input",
        p(&input),
        "--scale-covs",
        "x1,x2",
        "--shape-covs",
        "z1",
        "--de-gens",
        "10",
        "--seed",
        "5",
        "--format",
        "json",
    ]));
    let sel = &report["selection"];
    let lambda = sel["lambda_star"].as_array().unwrap();
    assert_eq!(lambda.len(), 1);
    assert!((0.0..=1.0).contains(&lambda[0].as_f64().unwrap()));
    assert_eq!(report["lambda"], sel["lambda_star"]);
    assert!(sel["selected_scale"].as_array().unwrap().iter().any(|v| v == "x1"));
    let trace: Vec<f64> = sel["bic_trace"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(*trace.last().unwrap(), sel["bic"].as_f64().unwrap());
}

#[test]
fn select_without_penalty_is_the_unpenalized_fit() {
    let dir = TempDir::new().unwrap();
    let input = weibull_csv(&dir, 120, 4);
    let common = ["--input", p(&input), "--scale-covs", "x1,x2", "--shape-covs", "z1", "--format", "json"];
    let sel = json(&mprsel(&[&["select", "--penalty", "none"], &common[..]].concat()));
    let fit = json(&mprsel(&[&["fit"], &common[..]].concat()));
    assert_eq!(sel["coefficients"], fit["coefficients"]);
    assert_eq!(sel["loglik"], fit["loglik"]);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    let input = weibull_csv(&dir, 120, 5);
    let config = write(&dir, "cfg.json", r#"{"penalty": "lasso", "scale_covs": ["x1"], "format": "json"}"#);
    let base = ["fit", "--input", p(&input), "--config", p(&config), "--lambda", "0.1"];
    let from_file = json(&mprsel(&base));
    assert_eq!(from_file["penalty"], "lasso");
    let overridden = json(&mprsel(&[&base[..], &["--penalty", "scad"]].concat()));
    assert_eq!(overridden["penalty"], "scad");
    assert_eq!(overridden["coefficients"].as_array().unwrap().len(), 3);

    let bad = write(&dir, "bad.json", r#"{"pentaly": "lasso"}"#);
    let out = mprsel(&["fit", "--input", p(&input), "--config", p(&bad)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_column_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "nostatus.csv", "time,x1\n1.0,0.2\n2.0,0.4\n");
    let out = mprsel(&["fit", "--input", p(&input), "--scale-covs", "x1"]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.contains("ParseError") && err.contains("status"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn bad_value_names_row_and_column() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "bad.csv", "time,status,x1\n1.0,1,0.2\n2.0,1,abc\n3.0,0,0.1\n");
    let out = mprsel(&["fit", "--input", p(&input), "--scale-covs", "x1"]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.contains("row 3") && err.contains("x1"), "{err}");
}

#[test]
fn missing_file_and_bad_flags() {
    let out = mprsel(&["fit", "--input", "/nonexistent/data.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("FileNotFound"));

    let dir = TempDir::new().unwrap();
    let input = weibull_csv(&dir, 50, 6);
    let out =
        mprsel(&["fit", "--input", p(&input), "--penalty", "lasso", "--tuning", "single-adaptive", "--lambda", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = mprsel(&["fit", "--input", p(&input), "--penalty", "ridge"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn km_check_csv_and_summary() {
    let dir = TempDir::new().unwrap();
    let input = weibull_csv(&dir, 300, 7);
    let out = mprsel(&["km-check", "--input", p(&input)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "log_t,log_H,ci_lo,ci_hi");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert!(rows.len() > 10);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0] && w[1][1] >= w[0][1]));
    assert!(rows.iter().all(|r| r[2] <= r[1] && r[1] <= r[3]));
    assert!(stderr(&out).starts_with("slope="));
}

#[test]
fn km_check_without_events_fails() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "censored.csv", "time,status\n1.0,0\n2.0,0\n3.0,0\n");
    let out = mprsel(&["km-check", "--input", p(&input)]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("NoEvents"));
}

#[test]
fn simulate_writes_json_and_csv() {
    let dir = TempDir::new().unwrap();
    let stem = dir.path().join("sim");
    let out =
        mprsel(&["simulate", "--n", "150", "--replicates", "3", "--de-gens", "5", "--seed", "3", "--output", p(&stem)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&fs::read_to_string(stem.with_extension("json")).unwrap()).unwrap();
    assert_eq!(report["command"], "simulate");
    assert_eq!(report["n_succeeded"].as_u64().unwrap() + report["n_failed"].as_u64().unwrap(), 3);
    assert!(report.get("mean_wall_time_secs").is_none_or(|v| v.is_null()));
    let csv = fs::read_to_string(stem.with_extension("csv")).unwrap();
    assert!(csv.starts_with("component,coefficient,metric,value\n"));
    assert!(csv.contains("scale,,C,") && csv.contains("shape,,PT,"));
    assert!(csv.contains(",beta1,CP,"));
}
