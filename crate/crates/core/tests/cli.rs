//! End-to-end checks of the `fronttrack` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fronttrack::config::parse_config;

fn fronttrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fronttrack"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.json");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn data_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

const BURGERS: &str =
    r#"{"model": "burgers", "datum": {"kind": "riemann", "uL": 1, "uR": 0}, "eps": 0.05, "tau": 0.05, "T": 1}"#;

#[test]
fn empty_run_writes_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": "burgers", "datum": {"kind": "riemann", "uL": 0.3, "uR": 0.3}, "eps": 0.05, "tau": 0.05, "T": 1}"#,
    );
    let out = dir.path().join("out");
    let o = fronttrack(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["fronts.csv", "events.csv", "functionals.csv", "atoms.csv", "curves.csv"] {
        assert_eq!(data_rows(&out.join(f)), 0, "{f}");
    }
    assert!(data_rows(&out.join("snapshots.csv")) > 0);
    for f in ["config.json", "summary.json", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn burgers_run_logs_one_shock() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BURGERS);
    let out = dir.path().join("out");
    let o = fronttrack(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let log = fs::read_to_string(out.join("fronts.csv")).unwrap();
    let rows: Vec<&str> = log.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].contains("SHOCK"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let fronts = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["file"] == "fronts.csv")
        .unwrap();
    assert_eq!(fronts["rows"], 1);
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": "elasticity", "source": {"kind": "elastic_damping", "alpha": 1},
            "datum": {"kind": "staircase", "positions": [0, 0.3], "states": [[0.5, 0], [0.52, 0.01], [0.5, 0]]},
            "eps": 0.1, "tau": 0.1, "T": 0.5}"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert!(fronttrack(&["run", "--config", &cfg, "--out", out.to_str().unwrap()])
            .status
            .success());
    }
    for f in [
        "snapshots.csv",
        "fronts.csv",
        "events.csv",
        "functionals.csv",
        "atoms.csv",
        "curves.csv",
    ] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn echoed_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BURGERS);
    let out = dir.path().join("out");
    assert!(fronttrack(&["run", "--config", &cfg, "--out", out.to_str().unwrap()])
        .status
        .success());
    let echoed = fs::read_to_string(out.join("config.json")).unwrap();
    let effective = parse_config(BURGERS, &[]).unwrap();
    assert_eq!(parse_config(&echoed, &[]).unwrap(), effective);
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &BURGERS.replace("\"tau\": 0.05", "\"tau\": 0.1"));
    let o = fronttrack(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));

    let cfg = write_config(dir.path(), &BURGERS.replace("\"eps\"", "\"epsilonn\": 1, \"eps\""));
    let o = fronttrack(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilonn"));
}

#[test]
fn overrides_reach_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BURGERS);
    let o = fronttrack(&["riemann", "--config", &cfg, "--override", "datum.uR=0.5"]);
    assert!(o.status.success());
    let fan: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let waves = fan["waves"].as_array().unwrap();
    assert_eq!(waves.len(), 1);
    assert_eq!(waves[0]["kind"], "SHOCK");
    assert!((waves[0]["speed"].as_f64().unwrap() - 0.75).abs() < 1e-12);
}

#[test]
fn missing_config_is_an_io_error() {
    let o = fronttrack(&["run", "--config", "/nonexistent/run.json"]);
    assert_eq!(o.status.code(), Some(4));
}
