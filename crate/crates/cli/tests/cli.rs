use std::path::Path;
use std::process::{Command, Output};

fn dqvrp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dqvrp")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

const FAST: [&str; 4] = ["--dynamic-sa-iterations", "200", "--offline-sa-iterations", "500"];

#[test]
fn evaluate_writes_a_complete_run() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out_s = out_dir.to_str().unwrap();
    let mut args = vec!["evaluate", "--preset", "uniform", "--instance-seed", "3", "--scenarios", "3", "--agent", "fafs,random-va", "--out", out_s];
    args.extend(FAST);
    let out = dqvrp(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["manifest.json", "records.csv", "timings.csv", "summary.json", "improvements.csv", "dod_curve.csv"] {
        assert!(out_dir.join(f).is_file(), "missing {f}");
    }
    let records = std::fs::read_to_string(out_dir.join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 2 * 3);

    let again = dqvrp(&["report", out_s, "--no-svg"]);
    assert_eq!(code(&again), 0, "{}", String::from_utf8_lossy(&again.stderr));
}

#[test]
fn missing_checkpoint_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("absent.json");
    let agent = format!("dqn-va:{}", model.display());
    let out = dqvrp(&["evaluate", "--preset", "uniform", "--scenarios", "2", "--agent", &agent]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("absent.json"), "{err}");
}

#[test]
fn report_on_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = dqvrp(&["report", dir.path().to_str().unwrap()]);
    assert_ne!(code(&out), 0);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("records.csv"), "{err}");
}

#[test]
fn unknown_preset_lists_choices() {
    let out = dqvrp(&["evaluate", "--preset", "nowhere", "--scenarios", "1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("scaled-clustered"));
}

#[test]
fn generate_round_trips_through_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let out = dqvrp(&["generate", "--preset", "clustered", "--seed", "4", "--out", inst.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(Path::new(&inst).is_file());

    let run = dir.path().join("run");
    let mut args = vec!["evaluate", "--instance", inst.to_str().unwrap(), "--scenarios", "2", "--agent", "fafs", "--out", run.to_str().unwrap()];
    args.extend(FAST);
    let out = dqvrp(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_file_wins_over_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "num_test_scenarios = 2\nbase_seed = 9\n").unwrap();
    let run = dir.path().join("run");
    let mut args = vec![
        "evaluate", "--preset", "uniform", "--config", cfg.to_str().unwrap(), "--scenarios", "5", "--agent", "fafs", "--out",
        run.to_str().unwrap(),
    ];
    args.extend(FAST);
    let out = dqvrp(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let records = std::fs::read_to_string(run.join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 2);
}

#[test]
fn oracle_check_runs() {
    let out = dqvrp(&["oracle-check", "--instances", "3", "--seed", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out.stdout.is_empty());
}
