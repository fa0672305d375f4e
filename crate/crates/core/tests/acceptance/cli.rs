//! The `nlspec` binary: exit codes, formats and determinism.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn problem(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("problems").join(name)
}

fn nlspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlspec"))
        .args(args)
        .output()
        .expect("nlspec runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    assert_eq!(code(out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn validate_exit_codes() {
    let half = problem("dexin_half.json");
    assert_eq!(code(&nlspec(&["validate", half.to_str().unwrap()])), 0);
    let bad = nlspec(&["validate", problem("half_mass.json").to_str().unwrap()]);
    assert_eq!(code(&bad), 1);
    assert!(String::from_utf8_lossy(&bad.stdout).contains("nu0"));

    let dir = tempfile::tempdir().unwrap();
    let malformed = dir.path().join("malformed.json");
    std::fs::write(&malformed, "{").unwrap();
    assert_eq!(code(&nlspec(&["validate", malformed.to_str().unwrap()])), 2);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&nlspec(&["validate", missing.to_str().unwrap()])), 2);
}

#[test]
fn argument_errors_exit_two() {
    assert_eq!(code(&nlspec(&["frobnicate"])), 2);
    let half = problem("dexin_half.json");
    let half = half.to_str().unwrap();
    assert_eq!(code(&nlspec(&["eigs", half, "--region", "1", "2"])), 2);
    assert_eq!(code(&nlspec(&["eigs", half, "--region", "5", "1", "-1", "1"])), 2);
    assert_eq!(code(&nlspec(&["--threads", "0", "validate", half])), 2);
    assert_eq!(code(&nlspec(&["--rtol", "-1", "validate", half])), 2);
    assert_eq!(code(&nlspec(&["--help"])), 0);
}

#[test]
fn eigs_reports_the_triple_eigenvalue() {
    let half = problem("dexin_half.json");
    let doc = json(&nlspec(&[
        "eigs",
        half.to_str().unwrap(),
        "--region",
        "1",
        "400",
        "-1",
        "1",
    ]));
    assert_eq!(doc["total_count"], 5);
    let eigs = doc["eigenvalues"].as_array().unwrap();
    let mults: Vec<u64> = eigs.iter().map(|e| e["multiplicity"].as_u64().unwrap()).collect();
    assert_eq!(mults, [1, 3, 1]);
    let triple = eigs[1]["re"].as_f64().unwrap();
    assert!((triple - 16.0 * PI * PI).abs() < 1e-8 * triple);
}

#[test]
fn oracle_and_search_agree() {
    let drift = problem("de_drift.json");
    let drift = drift.to_str().unwrap();
    let region = ["--region", "1", "200", "-20", "20"];
    let search = json(&nlspec(&[&["eigs", drift][..], &region].concat()));
    let oracle = json(&nlspec(&[&["eigs", drift][..], &region, &["--oracle", "de"]].concat()));
    let points = |doc: &Value| -> Vec<(f64, f64)> {
        doc["eigenvalues"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| (e["re"].as_f64().unwrap(), e["im"].as_f64().unwrap()))
            .collect()
    };
    let (a, b) = (points(&search), points(&oracle));
    assert_eq!(a.len(), 4);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x.0 - y.0).hypot(x.1 - y.1) < 1e-8 * x.0.hypot(x.1), "{x:?} vs {y:?}");
    }
}

#[test]
fn dexin_oracle_rejects_other_problems() {
    let drift = problem("de_drift.json");
    let out = nlspec(&[
        "eigs",
        drift.to_str().unwrap(),
        "--region",
        "1",
        "200",
        "-1",
        "1",
        "--oracle",
        "dexin",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn mult_exit_codes() {
    let half = problem("dexin_half.json");
    let half = half.to_str().unwrap();
    let doc = json(&nlspec(&["mult", half, "--lambda", "157.9", "0"]));
    assert_eq!(doc["multiplicity"], 3);
    assert_eq!(code(&nlspec(&["mult", half, "--lambda", "50", "0"])), 4);
}

#[test]
fn resolve_at_an_eigenvalue_is_numerical_failure() {
    let half = problem("dexin_half.json");
    let lambda = format!("{:.17}", 4.0 * PI * PI);
    let out = nlspec(&[
        "resolve",
        half.to_str().unwrap(),
        "--lambda",
        &lambda,
        "0",
        "--f-const",
        "1",
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn resolve_constant_forcing() {
    let half = problem("dexin_half.json");
    let out = nlspec(&[
        "resolve",
        half.to_str().unwrap(),
        "--lambda",
        "1",
        "1",
        "--f-const",
        "1",
        "--nodes",
        "5",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,re_f,im_f"));
    // A constant solves b0 u'' - λu = 1 with these boundary conditions: u = -1/λ.
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((cols[1] + 0.5).abs() < 1e-10 && (cols[2] - 0.5).abs() < 1e-10, "{line}");
    }
}

#[test]
fn gap_methods() {
    let half = problem("dexin_half.json");
    let doc = json(&nlspec(&["gap", half.to_str().unwrap()]));
    assert_eq!(doc["method"], "closed-form");
    assert!((doc["gap"].as_f64().unwrap() - 4.0 * PI * PI).abs() < 1e-12);

    let mixed = problem("piecewise_mixed.json");
    assert_eq!(code(&nlspec(&["gap", mixed.to_str().unwrap()])), 2);
    let doc = json(&nlspec(&[
        "gap",
        mixed.to_str().unwrap(),
        "--region",
        "1",
        "100",
        "-10",
        "10",
    ]));
    assert_eq!(doc["method"], "search");
    assert!(doc["gap"].as_f64().unwrap() > 1.0);
}

#[test]
fn grid_shape() {
    let half = problem("dexin_half.json");
    let out = nlspec(&[
        "grid",
        half.to_str().unwrap(),
        "--region",
        "0",
        "1",
        "0",
        "1",
        "--nx",
        "3",
        "--ny",
        "2",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("re_lambda,im_lambda,re_delta,im_delta"));
    assert_eq!(text.lines().count(), 1 + 6);
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let mixed = problem("piecewise_mixed.json");
    let args = ["eigs", mixed.to_str().unwrap(), "--region", "-5", "120", "-15", "15"];
    let first = nlspec(&args);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let second = nlspec(&args);
    let threaded = nlspec(&[&["--threads", "3"][..], &args].concat());
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.stdout, threaded.stdout);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eigs.csv");
    let half = problem("dexin_half.json");
    let out = nlspec(&[
        "eigs",
        half.to_str().unwrap(),
        "--region",
        "1",
        "400",
        "-1",
        "1",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("re,im,multiplicity,residual\n"));
}
