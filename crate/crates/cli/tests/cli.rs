use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn switchstab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_switchstab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const STABLE_FAMILY: &str = r#"{
  "dimension": 2,
  "subsystems": [
    {"id": 1, "class": "stable", "matrix": [[-1, 0], [0, -2]]},
    {"id": 2, "class": "stable", "matrix": [[-2, 1], [0, -1]]}
  ],
  "edges": [[1, 2], [2, 1]]
}"#;

const UNSTABLE_FAMILY: &str = r#"{
  "dimension": 1,
  "subsystems": [{"id": 1, "class": "unstable", "matrix": [[5]]}],
  "edges": []
}"#;

fn bundle(family: &str, signal: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("family.json"), family).unwrap();
    fs::write(dir.path().join("signal.json"), signal).unwrap();
    dir
}

#[test]
fn reproduce_passes_and_prints_the_lhs_row() {
    let o = switchstab(&["reproduce"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("asymptotic_LHS, 0.0834, published 0.0843, PASS(±0.002)"));
    assert!(out.contains("mixed_threshold_vs_published_tau_a, 34.5222, published 6.93, FLAG"));
    assert!(out.contains("burst_switches, 2097152.0000, PASS"));
}

#[test]
fn strict_tolerance_fails_reproduce() {
    let o = switchstab(&["reproduce", "--strict", "0.0005", "--nmax", "6"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("asymptotic_LHS, 0.0834, published 0.0843, FAIL(±0.0005)"));
}

#[test]
fn example_bundle_violates_unified() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let out = d.to_str().unwrap();
    assert_eq!(
        code(&switchstab(&["reproduce", "--nmax", "4", "--out", out])),
        0
    );
    let o = switchstab(&[
        "analyze",
        "--family",
        &path(d, "family.json"),
        "--signal",
        &path(d, "signal.json"),
        "--certs",
        &path(d, "certs.json"),
        "--criteria",
        "unified",
        "--out",
        out,
    ]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    let margin = report[0]["margin"].as_f64().unwrap();
    assert!((margin + 0.083).abs() < 1e-3, "{margin}");
    assert_eq!(report[0]["satisfied"], Value::Bool(false));
}

#[test]
fn no_switch_stable_bundle_passes() {
    let dir = bundle(
        STABLE_FAMILY,
        r#"{"taus": [0], "modes": [1], "horizon": 10}"#,
    );
    let d = dir.path();
    let o = switchstab(&[
        "analyze",
        "--family",
        &path(d, "family.json"),
        "--signal",
        &path(d, "signal.json"),
        "--criteria",
        "dwell,adt,mdadt,asymptotic,unified",
        "--tau-d",
        "1",
        "--N0",
        "1",
        "--tau-a",
        "1",
        "--out",
        d.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    let psi = fs::read_to_string(d.join("psi.csv")).unwrap();
    assert!(psi.starts_with("t,psi,Psi\n"));
    assert!(!psi.contains('\r'));
    // Built certificates are written and accepted back.
    let again = switchstab(&[
        "analyze",
        "--family",
        &path(d, "family.json"),
        "--signal",
        &path(d, "signal.json"),
        "--certs",
        &path(d, "certs.json"),
        "--out",
        d.to_str().unwrap(),
    ]);
    assert_eq!(code(&again), 0, "{}", stderr(&again));
}

#[test]
fn missing_modes_is_an_input_error() {
    let dir = bundle(STABLE_FAMILY, r#"{"taus": [0, 1], "horizon": 10}"#);
    let d = dir.path();
    let o = switchstab(&[
        "analyze",
        "--family",
        &path(d, "family.json"),
        "--signal",
        &path(d, "signal.json"),
        "--out",
        d.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(
        err.contains("modes") && err.contains("signal.json"),
        "{err}"
    );
}

#[test]
fn stable_run_decays_and_unstable_run_diverges() {
    let dir = bundle(
        STABLE_FAMILY,
        r#"{"taus": [0], "modes": [1], "horizon": 3}"#,
    );
    let d = dir.path();
    let o = switchstab(&[
        "simulate",
        "--family",
        &path(d, "family.json"),
        "--signal",
        &path(d, "signal.json"),
        "--x0",
        "1,0",
        "--out",
        d.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(d.join("trajectory.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    let x1: f64 = last.split(',').nth(2).unwrap().parse().unwrap();
    assert!((x1 - (-3f64).exp()).abs() < 1e-8);
    assert!(d.join("bound.json").exists());

    let dir = bundle(
        UNSTABLE_FAMILY,
        r#"{"taus": [0], "modes": [1], "horizon": 100}"#,
    );
    let d = dir.path();
    let o = switchstab(&[
        "simulate",
        "--family",
        &path(d, "family.json"),
        "--signal",
        &path(d, "signal.json"),
        "--out",
        d.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
    assert!(
        fs::read_to_string(d.join("trajectory.csv"))
            .unwrap()
            .lines()
            .count()
            > 2
    );
}

#[test]
fn generate_examples() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = switchstab(&[
        "generate", "--class", "adt", "--N0", "2", "--tau-a", "5", "--T", "500", "--seed", "7",
        "--out", out,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("round trip exact"));

    let o = switchstab(&["generate", "--class", "burst", "--nmax", "20", "--out", out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let signal: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("signal.json")).unwrap()).unwrap();
    assert_eq!(signal["horizon"].as_f64(), Some(2f64.powi(21)));

    let o = switchstab(&[
        "generate", "--class", "mixed", "--N0", "2", "--tau-a", "40", "--T0", "1", "--rho", "1.2",
        "--T", "100", "--out", out,
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn mixed_signal_on_the_example_family_simulates_within_the_bound() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let out = d.to_str().unwrap();
    assert_eq!(
        code(&switchstab(&["reproduce", "--nmax", "4", "--out", out])),
        0
    );
    let o = switchstab(&[
        "generate", "--class", "mixed", "--N0", "2", "--tau-a", "40", "--T0", "20", "--rho", "0.3",
        "--T", "400", "--seed", "3", "--out", out,
    ]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    let o = switchstab(&[
        "simulate",
        "--family",
        &path(d, "family.json"),
        "--signal",
        &path(d, "signal.json"),
        "--x0",
        "1,-1",
        "--out",
        out,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn config_supplies_flags_and_outputs_are_deterministic() {
    let dir = bundle(
        STABLE_FAMILY,
        r#"{"taus": [0, 1.5, 4], "modes": [1, 2, 1], "horizon": 10}"#,
    );
    let d = dir.path();
    let config = serde_json::json!({
        "family": path(d, "family.json"),
        "signal": path(d, "signal.json"),
        "criteria": ["adt", "unified"],
        "N0": 1,
        "tau-a": 1,
    });
    fs::write(d.join("config.json"), config.to_string()).unwrap();
    let run = |sub: &str| {
        let out = d.join(sub);
        let o = switchstab(&[
            "analyze",
            "--config",
            &path(d, "config.json"),
            "--jobs",
            "2",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        (
            fs::read(out.join("report.json")).unwrap(),
            fs::read(out.join("psi.csv")).unwrap(),
        )
    };
    assert_eq!(run("a"), run("b"));

    // An explicit flag overrides the config value.
    let o = switchstab(&[
        "analyze",
        "--config",
        &path(d, "config.json"),
        "--tau-a",
        "100",
        "--out",
        d.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn bad_flags_exit_two() {
    assert_eq!(code(&switchstab(&["analyze"])), 2);
    assert_eq!(code(&switchstab(&["generate", "--class", "nope"])), 2);
    assert_eq!(
        code(&switchstab(&["reproduce", "--config", "/nonexistent.json"])),
        2
    );
}
