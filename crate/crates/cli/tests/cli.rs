use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bivver(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bivver"))
        .args(args)
        .env("BIVVER_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = bivver(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// Value printed on a `name = value` line of stderr.
fn reported(out: &Output, name: &str) -> f64 {
    let prefix = format!("{name} = ");
    stderr(out)
        .lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no `{name}` line in {}", stderr(out)))
        .parse()
        .unwrap()
}

fn two_qubit(theta: f64) -> String {
    format!(r#"{{"schmidt":[{},{}]}}"#, theta.cos(), theta.sin())
}

fn qutrit(theta: f64) -> String {
    let a = (2.0f64 / 3.0).sqrt();
    format!(
        r#"{{"schmidt":[{},{},{}]}}"#,
        a * theta.cos(),
        (1.0f64 / 3.0).sqrt(),
        a * theta.sin()
    )
}

fn write_strategy(dir: &Path, family: &str, state: &str) -> String {
    let path = dir.join(format!("{family}.json"));
    let path = path.to_str().unwrap().to_owned();
    ok(&["strategy", "--family", family, "--state", state, "--output", &path]);
    path
}

#[test]
fn strategy_one_way_at_thirty_degrees() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("s.json");
    let out = ok(&[
        "strategy",
        "--family",
        "one-way",
        "--state",
        r#"{"schmidt":[0.866,0.5]}"#,
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!((reported(&out, "v") - 4.0 / 7.0).abs() < 1e-4);
    assert_eq!(reported(&out, "d"), 2.0);
    let file: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(file["tests"].as_array().unwrap().len(), 2);
}

#[test]
fn strategy_near_optimal_on_maximally_entangled_qutrits() {
    let c = (1.0f64 / 3.0).sqrt();
    let state = format!(r#"{{"schmidt":[{c},{c},{c}]}}"#);
    let out = ok(&["strategy", "--family", "two-way-near", "--state", &state]);
    assert!((reported(&out, "v") - 0.75).abs() < 1e-10);
    assert!(json(&out)["target"].is_object());
}

#[test]
fn strategy_rejects_two_qubit_family_on_qutrits() {
    let out = bivver(&["strategy", "--family", "two-way-2qubit", "--state", &qutrit(0.3)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn state_can_be_read_from_file() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("state.json");
    std::fs::write(&path, two_qubit(FRAC_PI_4)).unwrap();
    let out = ok(&["strategy", "--family", "two-way-2qubit", "--state", path.to_str().unwrap()]);
    assert!((reported(&out, "v") - 2.0 / 3.0).abs() < 1e-10);
}

#[test]
fn optimize_examples() {
    let out = ok(&["optimize", "--mode", "two-way", "--state", &two_qubit(FRAC_PI_4)]);
    let v = json(&out);
    assert!((v["value"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-4);
    for key in ["w", "rho_re", "rho_im", "residuals", "iterations", "ppt_min_eigenvalue"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }

    let theta = 0.3f64;
    let out = ok(&["optimize", "--mode", "one-way", "--state", &two_qubit(theta)]);
    let want = 1.0 / (1.0 + theta.cos().powi(2));
    assert!((json(&out)["value"].as_f64().unwrap() - want).abs() < 1e-4);

    let out = ok(&["optimize", "--mode", "two-way", "--state", &qutrit(FRAC_PI_8)]);
    let v = json(&out);
    let (value, near) = (
        v["value"].as_f64().unwrap(),
        v["analytic_reference"].as_f64().unwrap(),
    );
    assert!(value >= near - 1e-6 && value <= 1.05 * near, "{value} vs {near}");
    assert!(v["ppt_min_eigenvalue"].as_f64().unwrap() >= -1e-6);
}

#[test]
fn optimize_reports_non_convergence_with_exit_three() {
    let out = bivver(&[
        "optimize",
        "--mode",
        "two-way",
        "--no-seed",
        "--no-polish",
        "--max-iter",
        "20",
        "--state",
        r#"{"schmidt":[0.8,0.5,0.2,0.2645751311064591]}"#,
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("best feasible value"));
}

fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("theta,v_one_way,v_two_way_near,v_two_way_numeric,ratio")
    );
    lines
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn two_qubit_sweep_matches_closed_forms() {
    let rows = csv_rows(&ok(&["sweep", "--steps", "64"]));
    assert_eq!(rows.len(), 64);
    for row in &rows {
        let theta: f64 = row[0].parse().unwrap();
        assert!(theta > 0.0 && theta <= FRAC_PI_4 + 1e-15);
        let one: f64 = row[1].parse().unwrap();
        assert!((one - 1.0 / (1.0 + theta.cos().powi(2))).abs() < 1e-12);
        let near: f64 = row[2].parse().unwrap();
        assert!((near - 2.0 / 3.0).abs() < 1e-12);
        assert!(row[3].is_empty() && row[4].is_empty());
        // 17 significant digits
        assert_eq!(row[1].split('e').next().unwrap().len(), 18);
    }
}

#[test]
fn qutrit_numeric_sweep_stays_within_five_percent() {
    let rows = csv_rows(&ok(&["sweep", "--states", "qutrit", "--steps", "8", "--numeric"]));
    assert_eq!(rows.len(), 8);
    for row in rows {
        let ratio: f64 = row[4].parse().unwrap();
        assert!((1.0 - 1e-6..=1.05).contains(&ratio), "{ratio}");
    }
}

#[test]
fn sweep_rejects_empty_grid() {
    assert_eq!(bivver(&["sweep", "--steps", "0"]).status.code(), Some(2));
    let out = bivver(&["sweep", "--theta-min", "0.5", "--theta-max", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_json_rows() {
    let out = ok(&["sweep", "--steps", "4", "--format", "json"]);
    let rows = json(&out);
    assert_eq!(rows.as_array().unwrap().len(), 4);
    assert!(rows[0]["v_two_way_numeric"].is_null());
}

#[test]
fn simulate_worst_case_pass_rate() {
    let dir = TempDir::new().unwrap();
    let s = write_strategy(dir.path(), "two-way-2qubit", &two_qubit(FRAC_PI_8));
    let out = ok(&["simulate", "--strategy", &s, "--epsilon", "0.3", "--copies", "100000", "--seed", "5"]);
    let report = json(&out);
    let passes = report["passes"].as_f64().unwrap();
    let trials = report["trials"].as_f64().unwrap();
    assert_eq!(trials, 1e5);
    let sd = (0.8f64 * 0.2 / 1e5).sqrt();
    assert!((passes / trials - 0.8).abs() <= 3.0 * sd);
    assert!((report["analytic_rate"].as_f64().unwrap() - 0.2).abs() < 1e-12);
}

#[test]
fn simulate_without_noise_never_fails() {
    let dir = TempDir::new().unwrap();
    let s = write_strategy(dir.path(), "one-way", &qutrit(0.4));
    let out = ok(&["simulate", "--strategy", &s, "--epsilon", "0", "--copies", "2000"]);
    let report = json(&out);
    assert_eq!(report["passes"], report["trials"]);
}

#[test]
fn simulate_supplied_sigma() {
    let dir = TempDir::new().unwrap();
    let s = write_strategy(dir.path(), "two-way-2qubit", &two_qubit(FRAC_PI_4));
    // maximally mixed two-qubit state
    let sigma = dir.path().join("sigma.json");
    let rows: Vec<Vec<[f64; 2]>> = (0..4)
        .map(|i| (0..4).map(|j| [if i == j { 0.25 } else { 0.0 }, 0.0]).collect())
        .collect();
    std::fs::write(&sigma, serde_json::to_string(&rows).unwrap()).unwrap();
    let out = ok(&["simulate", "--strategy", &s, "--sigma", sigma.to_str().unwrap(), "--copies", "10"]);
    // Tr(Ω I/4) = (1 + 3/3)/4
    assert!((json(&out)["analytic_rate"].as_f64().unwrap() - 0.5).abs() < 1e-12);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "[[[1.0, 0.0]]]").unwrap();
    let out = bivver(&["simulate", "--strategy", &s, "--sigma", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_derives_copies_from_delta() {
    let dir = TempDir::new().unwrap();
    let s = write_strategy(dir.path(), "two-way-2qubit", &two_qubit(FRAC_PI_4));
    let out = ok(&[
        "simulate", "--strategy", &s, "--copies", "from", "--delta", "0.01", "--epsilon", "0.1",
        "--mode", "stop-on-fail", "--trials", "100",
    ]);
    assert_eq!(reported(&out, "N"), 67.0);
    assert_eq!(json(&out)["copies_per_trial"], 67);
}

#[test]
fn copies_command() {
    let out = ok(&["copies", "--v", "0.6666666666666666", "--epsilon", "0.1", "--delta", "0.01"]);
    assert_eq!(json(&out)["copies"], 67);
    let out = ok(&[
        "copies", "--v", "0.6666666666666666", "--epsilon", "0.1", "--delta", "0.01", "--format", "csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("v,epsilon,delta,copies,confidence\n"));
    assert!(text.lines().nth(1).unwrap().contains(",67,"));
    assert_eq!(bivver(&["copies", "--v", "0", "--epsilon", "0.1", "--delta", "0.1"]).status.code(), Some(2));
}

#[test]
fn runs_are_byte_identical_given_seed() {
    let dir = TempDir::new().unwrap();
    let s = write_strategy(dir.path(), "two-way-near", &qutrit(0.5));
    let args = ["simulate", "--strategy", &s, "--epsilon", "0.2", "--copies", "5000", "--seed", "9"];
    assert_eq!(ok(&args).stdout, ok(&args).stdout);
    let sweep = ["sweep", "--states", "qutrit", "--steps", "3", "--numeric"];
    assert_eq!(ok(&sweep).stdout, ok(&sweep).stdout);
}

#[test]
fn output_flag_writes_file() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("rows.csv");
    let out = ok(&["sweep", "--steps", "2", "--output", path.to_str().unwrap()]);
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(path).unwrap().lines().count(), 3);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(bivver(&["optimize", "--mode", "sideways"]).status.code(), Some(2));
    assert_eq!(bivver(&["optimize", "--mode", "one-way"]).status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_bivver"))
        .args(["copies", "--v", "0.5", "--epsilon", "0.1", "--delta", "0.1"])
        .env("BIVVER_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
