use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const QUARTIC: [f64; 7] = [-0.09962, -0.1333, -0.04195, -0.03139, -0.01471, -0.01119, -0.007613];
const HEADER: &str = "Deg,L2-error,Max,Min,beta,grad_s_norm,grad_sinv_norm";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toric-extremal")).args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn coeffs(path: &Path) -> Vec<f64> {
    read_json(path)["coeffs"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect()
}

fn solve(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["solve", "--degree", "4", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn solve_quartic_with_both_methods() {
    let (cg, lm) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let out = solve(cg.path(), &["--method", "cg"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(solve(lm.path(), &["--method", "lm"]).status.code(), Some(0));

    let a = coeffs(&cg.path().join("coeffs_deg4.json"));
    let b = coeffs(&lm.path().join("coeffs_deg4.json"));
    for ((x, y), q) in a.iter().zip(&b).zip(QUARTIC) {
        assert!((x - q).abs() <= 5e-3 * q.abs(), "{x} vs {q}");
        assert!((x - y).abs() <= 1e-6, "{x} vs {y}");
    }
    let report = read_json(&cg.path().join("report_deg4.json"));
    assert_eq!(report["report"]["termination"], "value-converged");
    assert!(cg.path().join("runlog_deg4.csv").exists());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains(HEADER));
}

#[test]
fn degree_below_two_is_rejected() {
    let dir = TempDir::new().unwrap();
    let out = run(&["solve", "--degree", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degree"));
}

#[test]
fn quadrature_order_is_range_checked() {
    let dir = TempDir::new().unwrap();
    let out = run(&["solve", "--degree", "2", "--quad-order", "65", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn exhausted_budget_exits_two() {
    let dir = TempDir::new().unwrap();
    let out = solve(dir.path(), &["--method", "cg", "--max-rounds", "1"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(dir.path().join("coeffs_deg4.json").exists());
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let out = run(&["sweep", "--degrees", "5..4", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(dir.path().join("table.csv")).unwrap(), format!("{HEADER}\n"));
}

#[test]
fn sweep_rows_follow_the_table_layout() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run(&["sweep", "--degrees", "2..4", "--out", d]);
    assert_eq!(out.status.code(), Some(0));
    let table = fs::read_to_string(dir.path().join("table.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], HEADER);
    assert_eq!(lines.len(), 4);
    let l2: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    for (x, r) in l2.iter().zip([0.48, 0.25, 0.13]) {
        assert!((x - r).abs() <= 5e-2 * r, "{x} vs {r}");
    }
    for n in 2..=4 {
        assert!(dir.path().join(format!("coeffs_deg{n}.json")).exists());
    }

    let out = run(&["sweep", "--degrees", "2..3", "--objective", "conformal", "--format", "json", "--out", d]);
    assert_eq!(out.status.code(), Some(0));
    let rows = read_json(&dir.path().join("table.json"));
    assert_eq!(rows.as_array().unwrap().len(), 2);
    assert!(rows[1]["row"]["beta"].as_f64().unwrap() > 0.0);
}

#[test]
fn diagnose_round_trips_in_run_row() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(solve(dir.path(), &[]).status.code(), Some(0));
    let file = dir.path().join("coeffs_deg4.json");
    let out = run(&["diagnose", "--in", file.to_str().unwrap(), "--quad-order", "10", "--out", d]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let in_run = read_json(&dir.path().join("report_deg4.json"))["diagnostics"].clone();
    let diagnosed = read_json(&dir.path().join("diagnostics.json"));
    assert_eq!(in_run, diagnosed["row"]);
    let minus = diagnosed["stability"]["minus"]["eigenvalue"].as_f64().unwrap();
    assert!(minus > 4.0 / 3.0 && minus < 2.0);
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("cone unstable: yes"));
}

#[test]
fn diagnose_canonical_potential() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("zero.json");
    fs::write(&file, r#"{"a": 1.9577128052, "degree": 4, "symmetric": true, "coeffs": [0, 0, 0, 0, 0, 0, 0]}"#)
        .unwrap();
    let out = run(&["diagnose", "--in", file.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let row = &read_json(&dir.path().join("diagnostics.json"))["row"];
    for key in ["l2_error", "max_dev", "min_dev", "beta", "grad_s_norm", "grad_sinv_norm"] {
        assert!(row[key].as_f64().unwrap().is_finite(), "{key}");
    }
}

#[test]
fn corrupt_coefficient_file_fails() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("bad.json");
    fs::write(&file, r#"{"a": 1.95, "degree": 4, "coe"#).unwrap();
    let out = run(&["diagnose", "--in", file.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed"));
    assert!(!dir.path().join("diagnostics.json").exists());
}

#[test]
fn warm_start_from_lower_degree() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(run(&["solve", "--degree", "3", "--out", d]).status.code(), Some(0));
    let seed = dir.path().join("coeffs_deg3.json");
    let out = run(&["solve", "--degree", "4", "--in", seed.to_str().unwrap(), "--out", d]);
    assert_eq!(out.status.code(), Some(0));
    for (x, q) in coeffs(&dir.path().join("coeffs_deg4.json")).iter().zip(QUARTIC) {
        assert!((x - q).abs() <= 5e-3 * q.abs());
    }
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for dir in [&a, &b] {
        let out = run(&["sweep", "--degrees", "2..3", "--method", "lm", "--out", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    for name in ["table.csv", "coeffs_deg2.json", "coeffs_deg3.json", "report_deg3.json", "runlog_deg3.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}
