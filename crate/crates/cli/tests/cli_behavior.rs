//! End-to-end behavior of the binary: exit statuses, output files, the seed
//! environment override, and format selection.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_proxverify"))
}

#[test]
fn verify_at_beta_star_exits_zero() {
    let out = bin()
        .args(["verify", "quadratic:d=2,diag=2;1", "--beta", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"schema_version\": 1"));
    assert!(!text.contains("EXPECTED_FAIL"));
}

#[test]
fn verify_sub_critical_is_expected_fail_and_exit_zero() {
    let out = bin()
        .args(["verify", "quadratic:d=2,diag=2;1", "--beta", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("EXPECTED_FAIL"));
    assert!(text.contains("\"status\": \"FAIL\""));
}

#[test]
fn unknown_function_exits_two() {
    let out = bin().args(["verify", "nosuchfn"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown function name"));
}

#[test]
fn unparseable_spec_reports_position() {
    let out = bin().args(["verify", "huber:delta=abc"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("position 12"));
}

#[test]
fn step_outside_open_interval_exits_two() {
    let out = bin()
        .args([
            "solve", "--f1", "zero:d=1", "--f2", "quadratic:d=1,a=1", "--algo", "fb", "--gamma",
            "2.0", "--iters", "5",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("open interval"));
}

#[test]
fn io_failure_exits_three() {
    let out = bin()
        .args([
            "verify",
            "quadratic:d=1,a=1",
            "--beta",
            "1",
            "--output",
            "/nonexistent-dir/report.json",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn solve_both_reports_zero_deviation() {
    let out = bin()
        .args([
            "solve", "--f1", "l1:d=1", "--f2", "quadratic:d=1,a=1,b=-2", "--algo", "both",
            "--gamma", "1", "--iters", "100",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text
        .lines()
        .find(|l| l.starts_with("compare_traces deviation:"))
        .expect("deviation line");
    let value: f64 = line.split(':').nth(1).unwrap().trim().parse().unwrap();
    assert!(value <= 1e-12);
}

#[test]
fn solve_trace_matches_documented_example() {
    let out = bin()
        .args([
            "solve", "--f1", "zero:d=1", "--f2", "quadratic:d=1,a=1", "--gamma", "1", "--iters",
            "3", "--x0", "2",
        ])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,gamma_n,objective,x0");
    assert_eq!(lines[1], "0,,2,2");
    assert_eq!(lines[2], "1,1,0,0");
    assert_eq!(lines[4], "3,1,0,0");
}

#[test]
fn solve_both_writes_suffixed_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("trace.csv");
    let out = bin()
        .args([
            "solve", "--f1", "l1:d=1", "--f2", "quadratic:d=1,a=1,b=-2", "--algo", "both",
            "--gamma", "0.5", "--iters", "10", "--output",
        ])
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("trace.fb.csv").exists());
    assert!(dir.path().join("trace.bb.csv").exists());
}

#[test]
fn estimate_quadratic_constants_agree() {
    let out = bin()
        .args(["estimate", "quadratic:d=2,diag=2;1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let lip = doc["body"]["beta_lipschitz"].as_f64().unwrap();
    let coco = doc["body"]["beta_cocoercive"].as_f64().unwrap();
    assert!((lip - 2.0).abs() / 2.0 < 0.05);
    assert!((coco - 2.0).abs() / 2.0 < 0.05);
    assert!((lip - coco).abs() / coco < 0.05);
}

#[test]
fn estimate_huber_half_delta() {
    let out = bin()
        .args(["estimate", "huber:delta=0.5,d=1"])
        .output()
        .unwrap();
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let lip = doc["body"]["beta_lipschitz"].as_f64().unwrap();
    assert!((lip - 2.0).abs() / 2.0 < 0.05);
}

#[test]
fn estimate_negid_reports_violations() {
    let out = bin().args(["estimate", "negid:d=2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["body"]["cocoercivity_violations"].as_u64().unwrap() > 0);
    assert!(doc["body"]["violation_witness"].is_array());
}

#[test]
fn env_seed_overrides_flag() {
    let out = bin()
        .args(["estimate", "quadratic:d=1,a=1", "--seed", "5"])
        .env("PROXVERIFY_SEED", "77")
        .output()
        .unwrap();
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["header"]["seed"].as_u64(), Some(77));
}

#[test]
fn invalid_env_seed_exits_two() {
    let out = bin()
        .args(["estimate", "quadratic:d=1,a=1"])
        .env("PROXVERIFY_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_report_has_one_row_per_check() {
    let out = bin()
        .args([
            "verify",
            "quadratic:d=1,a=1",
            "--beta",
            "1",
            "--format",
            "csv",
        ])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("function,beta,check_id,status,label"));
    // 7 equivalence + 2 bregman + 6 second-order rows
    assert_eq!(lines.len(), 1 + 15);
    assert!(!text.contains("timestamp"));
}

#[test]
fn negid_rejected_outside_estimate() {
    let out = bin().args(["verify", "negid:d=2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .args([
            "solve", "--f1", "negid:d=1", "--f2", "quadratic:d=1,a=1", "--gamma", "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
