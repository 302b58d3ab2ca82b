use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn csk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csk")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn classify_pure_laplacian() {
    let out = csk(&["classify", "--b", "0", "--c", "0", "--m", "0", "--p", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["D"], 0.25);
    assert_eq!(v["s1"], -1.0);
    assert_eq!(v["s2"], 0.0);
    assert_eq!(v["window"], serde_json::json!([-1.0, 2.0]));
    assert_eq!(v["inside_window"], true);
}

#[test]
fn classify_negative_discriminant_exits_2() {
    let out = csk(&["classify", "--b", "-1", "--c", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("negative discriminant"));
}

#[test]
fn classify_rellich_constant() {
    let v = json_of(&csk(&["classify", "--rellich", "--b", "1", "--c", "0", "--p", "2"]));
    assert_eq!(v["rellich"]["best_constant"], 4.0);
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,y,rho,p,dp_dy,envelope"));
    lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

#[test]
fn kernel_eval_unit_point() {
    let out = csk(&["kernel-eval", "--kind", "neumann", "--c", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    let want = (1.0 + (-1.0f64).exp()) / (2.0 * std::f64::consts::PI.sqrt());
    assert!((rows[0][3] - want).abs() < 1e-14);
    let out = csk(&["kernel-eval", "--kind", "dirichlet", "--c", "0"]);
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    let want = (1.0 - (-1.0f64).exp()) / (2.0 * std::f64::consts::PI.sqrt());
    assert!((rows[0][3] - want).abs() < 1e-14);
}

#[test]
fn kernel_eval_envelope_dominates() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.csv");
    let out = csk(&[
        "kernel-eval",
        "--kind",
        "standard",
        "--b",
        "1",
        "--c",
        "0.5",
        "--t",
        "0.01:100:5",
        "--y",
        "0.001:10:7",
        "--rho",
        "0.001:10:7",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 5 * 7 * 7);
    assert!(rows.iter().all(|r| r[5] >= r[3]));
    // 17 significant digits
    let first = text.lines().nth(1).unwrap().split(',').next().unwrap();
    assert_eq!(first.split('e').next().unwrap().replace('.', "").len(), 17);
}

#[test]
fn kernel_eval_rejects_inadmissible() {
    assert_eq!(csk(&["kernel-eval", "--kind", "dirichlet", "--c", "1.5"]).status.code(), Some(2));
    assert_eq!(csk(&["kernel-eval", "--t", "1:oops"]).status.code(), Some(2));
}

#[test]
fn elliptic_default_residual() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = csk(&["solve", "elliptic", "--report", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = read_json(&report);
    assert_eq!(v["pass"], true);
    assert!(v["checks"][0]["measured"].as_f64().unwrap() < 1e-3);
}

#[test]
fn csv_field_output_layout() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let common = ["--kind", "standard", "--b", "1", "--c", "0.5", "--n-geo", "64", "--n-uni", "128"];
    let mut args = vec!["solve", "elliptic", "--x-dims", "0", "-o", a.to_str().unwrap()];
    args.extend(common);
    csk(&args);
    let half = std::fs::read_to_string(&a).unwrap();
    assert!(half.starts_with("y,value\n"));
    let ny = half.lines().count() - 1;
    let mut args = vec!["solve", "elliptic", "--x-dims", "1", "--x-count", "8", "-o", b.to_str().unwrap()];
    args.extend(common);
    csk(&args);
    let full = std::fs::read_to_string(&b).unwrap();
    assert!(full.starts_with("x0,y,value\n"));
    assert_eq!(full.lines().count() - 1, 8 * ny);
    assert!(full.lines().skip(1).all(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap().is_finite()));
}

#[test]
fn parabolic_neumann_conserves_mass() {
    let out = csk(&[
        "solve",
        "parabolic",
        "--kind",
        "neumann",
        "--c",
        "0.5",
        "--t",
        "0.5",
        "--n-geo",
        "128",
        "--n-uni",
        "256",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["checks"][0]["name"], "mass-drift");
    assert_eq!(v["pass"], true);
}

#[test]
fn solve_round_trips_through_binary_field() {
    let dir = tempfile::tempdir().unwrap();
    let u = dir.path().join("u.bin");
    let common = ["--kind", "neumann", "--c", "0.5", "--n-geo", "128", "--n-uni", "512", "--x-count", "16"];
    let mut args = vec!["solve", "parabolic", "--t", "0.25", "-o", u.to_str().unwrap()];
    args.extend(common);
    assert_eq!(csk(&args).status.code(), Some(0));
    let mut args = vec!["solve", "elliptic", "--input", u.to_str().unwrap()];
    args.extend(common);
    let out = csk(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn coarse_grid_fails_with_exit_3() {
    let out = csk(&["solve", "elliptic", "--n-geo", "16", "--n-uni", "24", "--x-count", "8"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json_of(&out)["pass"], false);
}

#[test]
fn verify_reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let out = csk(&["verify", "chapman-kolmogorov", "--seed", "5", "-o", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v = read_json(&a);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["config"]["seed"], 5);
    assert_eq!(v["config"]["suite"], "chapman-kolmogorov");
}

#[test]
fn verify_config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"samples": 4, "seed": 3}"#).unwrap();
    let out = csk(&["verify", "conservation", "--config", cfg.to_str().unwrap(), "--seed", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["config"]["seed"], 8);
    assert_eq!(v["config"]["samples"], 4);
    assert_eq!(v["checks"].as_array().unwrap().len(), 4);
}

#[test]
fn verify_rejects_bad_input() {
    assert_eq!(csk(&["verify", "no-such-suite"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"tolerance": 1}"#).unwrap();
    assert_eq!(csk(&["verify", "conservation", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(csk(&["verify", "closedness", "--b", "0", "--c", "0", "--m", "5", "--p", "2"]).status.code(), Some(2));
}

#[test]
fn verify_rellich() {
    let out = csk(&["verify", "rellich", "--b", "1", "--c", "0", "--p", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    for c in v["checks"].as_array().unwrap().iter().filter(|c| c["name"] == "test-set") {
        assert!(c["measured"].as_f64().unwrap() <= 4.0 * 1.05);
    }
}

#[test]
fn verify_list_names_every_suite() {
    let out = csk(&["verify", "list"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["conservation", "hardy", "rademacher", "trace-limits", "domain-limits"] {
        assert!(text.lines().any(|l| l == name), "{name}");
    }
}

#[test]
fn probes_run() {
    let out = csk(&["probe", "concentration", "--m", "4", "--p", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let out = csk(&["probe", "sab", "--alpha", "0.3", "--beta", "0.2", "--m", "1", "--p", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(csk(&["probe", "rademacher", "--mode", "sideways"]).status.code(), Some(2));
}

#[test]
fn thread_variable_is_validated() {
    let out =
        Command::new(env!("CARGO_BIN_EXE_csk")).args(["verify", "list"]).env("CSK_THREADS", "many").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_csk"))
        .args(["verify", "conservation", "--samples", "3"])
        .env("CSK_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}
