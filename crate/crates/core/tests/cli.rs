use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ris-imager"))
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

#[test]
fn simulate_writes_table_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("small.csv");
    let run = bin()
        .args(["simulate", "--config"])
        .arg(data("small.toml"))
        .args(["--trials", "2", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(0));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("experiment,"));
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("small.csv.json")).unwrap()).unwrap();
    assert_eq!(sidecar["config"]["trials"], 2);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = bin()
        .args(["simulate", "--config", "/nonexistent/cfg.toml", "--out"])
        .arg(dir.path().join("x.csv"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "trials = 0\n").unwrap();
    let invalid = bin()
        .args(["simulate", "--config"])
        .arg(&bad)
        .args(["--out"])
        .arg(dir.path().join("x.csv"))
        .output()
        .unwrap();
    assert_eq!(invalid.status.code(), Some(2));

    let preset = bin().args(["reproduce", "fig5"]).output().unwrap();
    assert_eq!(preset.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&preset.stderr).contains("fig5"));
}

#[test]
fn numerical_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("underflow.toml");
    let text = std::fs::read_to_string(data("small.toml")).unwrap();
    std::fs::write(&cfg, format!("gain = 1e-300\n{text}")).unwrap();
    let out = bin()
        .args(["optimize-phases", "--config"])
        .arg(&cfg)
        .args(["--k", "10", "--iterations", "2", "--out"])
        .arg(dir.path().join("cb.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn analyze_limits_reports_resolution() {
    let out = bin().args(["analyze", "limits"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(!out.stdout.is_empty());
}
