//! Experiment runner: sweeps, outputs and reproducibility.

use ncchern::experiment::{read_json, run_experiment, ExperimentConfig, ResultRecord, Status};

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(text).unwrap()
}

fn strip_timing(mut recs: Vec<ResultRecord>) -> Vec<ResultRecord> {
    for r in recs.iter_mut() {
        r.wall_time_s = 0.0;
    }
    recs
}

#[test]
fn chern_sweep_tracks_the_oracle() {
    let recs = run_experiment(&config(
        r#"
kind = "chern"
sizes = [12, 16, 24]
[model]
builtin = "chern"
mass = 1.0
"#,
    ))
    .unwrap();
    assert_eq!(recs.len(), 3);
    for r in &recs {
        assert_eq!(r.status, Status::Ok);
        assert_eq!(r.reference, Some(-1));
        assert!((r.value_re.unwrap() + 1.0).abs() < 0.01, "{:?}", r.value_re);
        assert_eq!(r.within_tolerance, Some(true));
    }
}

#[test]
fn oracle_and_identity_records() {
    let oracle = run_experiment(&config(
        r#"
kind = "oracle"
sizes = [16, 32]
[model]
builtin = "chern"
mass = -1.0
"#,
    ))
    .unwrap();
    assert!(oracle.iter().all(|r| r.reference == Some(1)));

    let id = run_experiment(&config(
        r#"
kind = "identity-check"
[identity]
d = 2
points = [[[1, 0], [0, 1]], [[2, 1], [-1, 3]]]
cutoff = 120
grid = 3
"#,
    ))
    .unwrap();
    assert_eq!(id.len(), 2);
    for r in &id {
        assert_eq!(r.status, Status::Ok, "{:?}", r.error);
        assert!(r.extra["relative_error"] < 0.02, "{:?}", r.extra);
    }
}

#[test]
fn disordered_index_sweep_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"
kind = "index"
sizes = [6]
seeds = [1, 2]
output = "{}"
threads = 2
[model]
builtin = "chern"
mass = 1.0
disorder = 0.5
[index]
windows = [3]
kernel = true
[index.x0]
mode = "midpoint"
points = 2
"#,
        dir.path().display()
    );
    let first = run_experiment(&config(&text)).unwrap();
    let second = run_experiment(&config(&text)).unwrap();
    assert_eq!(first.len(), 2 * 4);
    assert!(first.iter().all(|r| r.status == Status::Ok));
    assert_eq!(strip_timing(first.clone()), strip_timing(second));
    assert!(first.iter().all(|r| r.extra.contains_key("ker_f")));

    let stored = read_json(&dir.path().join("results.json")).unwrap();
    assert_eq!(strip_timing(stored.records), strip_timing(first));
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.starts_with("schema_version,experiment_id,kind"));
    assert_eq!(csv.lines().count(), 1 + 8);
}

#[test]
fn decay_tables_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"
kind = "decay"
sizes = [6]
output = "{}"
[model]
builtin = "chern"
mass = 1.0
[decay]
power = 2
"#,
        dir.path().display()
    );
    let recs = run_experiment(&config(&text)).unwrap();
    assert_eq!(recs[0].status, Status::Ok, "{:?}", recs[0].error);
    assert!(recs[0].extra["slope"] < 0.0);
    let table = std::fs::read_to_string(dir.path().join("decay_R6.csv")).unwrap();
    assert!(table.lines().count() > 10);
}

#[test]
fn failing_points_do_not_abort_the_sweep() {
    let recs = run_experiment(&config(
        r#"
kind = "chern"
sizes = [4, 6]
[model]
builtin = "chern"
mass = 2.0
"#,
    ))
    .unwrap();
    assert_eq!(recs[0].status, Status::Failed);
    assert!(recs[0].value_re.is_none());
    assert_eq!(recs[1].status, Status::Failed);
}
