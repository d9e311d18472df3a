use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ncchern"))
}

#[test]
fn small_sweep_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("chern.toml");
    fs::write(&cfg, "kind = \"chern\"\nsizes = [8]\n[model]\nbuiltin = \"chern\"\nmass = 1.0\n").unwrap();
    let out = dir.path().join("out");
    let run = bin()
        .args(["chern", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--sizes", "6,8", "--threads", "1", "--tolerance", "0.1"])
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("chern-6") && stdout.contains("chern-8"), "{stdout}");
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let json = fs::read_to_string(out.join("results.json")).unwrap();
    assert!(json.contains("\"schema_version\""));
}

#[test]
fn malformed_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "kind = \"index\"\nsizes = [4]\n[model]\nbuiltin = \"atomic\"\nd = 3\n").unwrap();
    let run = bin().args(["index", "--config"]).arg(&cfg).output().unwrap();
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("error"));
}

#[test]
fn kind_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("chern.toml");
    fs::write(&cfg, "kind = \"chern\"\nsizes = [8]\n[model]\nbuiltin = \"chern\"\nmass = 1.0\n").unwrap();
    let run = bin().args(["oracle", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn oracle_runs_without_a_config() {
    let run = bin().args(["oracle", "--sizes", "24"]).output().unwrap();
    assert!(run.status.success());
    assert!(String::from_utf8_lossy(&run.stdout).contains("ref=-1"));
}
