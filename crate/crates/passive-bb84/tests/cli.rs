//! End-to-end checks of the installed binary: exit codes, output formats,
//! and the bundled preset.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_passive-bb84"))
}

fn preset() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets/paper.json")
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("passive-bb84-e2e-{}-{name}", std::process::id()))
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

#[test]
fn test_help_exits_zero_and_lists_subcommands() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    for sub in ["rate", "expected", "simulate", "verify-povm", "sweep"] {
        assert!(text.contains(sub), "--help must mention {sub}");
    }
}

#[test]
fn test_unknown_subcommand_exits_one() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn test_missing_file_exits_three() {
    let out = bin()
        .args(["rate", "--config", "/no/such/config.json", "--stats", "x.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty(), "diagnostic goes to stderr");
    assert!(out.stdout.is_empty(), "stdout stays clean on failure");
}

#[test]
fn test_preset_expected_feeds_rate() {
    let preset = preset();
    let out = bin()
        .args(["expected", "--config"])
        .arg(&preset)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout_of(&out);
    assert!(csv.starts_with("intensity_tag,Q_Z,E_X,Q_cross"));

    let stats = temp_path("stats.csv");
    std::fs::write(&stats, &csv).unwrap();
    let out = bin()
        .args(["rate", "--config"])
        .arg(&preset)
        .arg("--stats")
        .arg(&stats)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(report["variant"], "passive");
    assert_eq!(report["valid"], true);
    // frozen from the independent reference pipeline
    // (tools/reference_values.py)
    let r = report["R"].as_f64().unwrap();
    assert!(
        (r - 0.08394632541696989).abs() < 1e-12,
        "preset short-fiber rate moved: {r}"
    );
}

#[test]
fn test_simulate_emits_seeded_json() {
    let out = bin()
        .args(["simulate", "--config"])
        .arg(preset())
        .args(["--rounds", "50000", "--seed", "9"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let result: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(result["rng_trace"]["seed"], 9);
    assert_eq!(result["rng_trace"]["streams"], 6);
    assert!(result["stats"]["Q_Z_total"].as_f64().unwrap() > 0.0);
}

#[test]
fn test_verify_povm_reports_all_pass() {
    let out = bin()
        .args(["verify-povm", "--trials", "5", "--nmax", "3", "--seed", "7"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout_of(&out);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "case,max_deviation,status");
    let mut rows = 0;
    for line in lines {
        assert!(line.ends_with(",PASS"), "unexpected row: {line}");
        rows += 1;
    }
    assert!(rows >= 5, "expected several check rows, got {rows}");

    let out = bin()
        .args(["verify-povm", "--nmax", "9"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "nmax beyond the subspace limit");
}

#[test]
fn test_sweep_writes_table() {
    let cfg = temp_path("sweep-config.json");
    std::fs::write(
        &cfg,
        r#"{
            "receiver": {"p_Z": 0.9, "d": 1e-7, "eta_Z": 0.7, "eta_X": 0.7},
            "source": {"mu": 0.5, "nu": 0.05, "p_mu": 1.0, "p_nu": 0.0,
                       "p_0": 0.0, "p_Z_alice": 0.9},
            "channel": {"length_km": 0.0, "e_ch": 0.03},
            "sweep": {
                "lengths": [0.0, 50.0],
                "p_Z_grid": [0.9, 0.95],
                "mu_grid": [0.5],
                "variants": ["active", "passive_r1"]
            }
        }"#,
    )
    .unwrap();
    let table = temp_path("table.csv");
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&table)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty(), "--out leaves stdout clean");
    let csv = std::fs::read_to_string(&table).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "length_km,variant,p_Z,mu,R,valid,h_arg");
    assert_eq!(lines.len(), 5, "two lengths, two variants");
}
