//! End-to-end tests of the `banditlab` binary: command surfaces, file
//! contracts, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn banditlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_banditlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn inspect_reports_the_preset_columns() {
    let out = banditlab(&["inspect", "--preset", "S1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for needle in ["0.3750", "0.2500", "0.6667", "0.7778", "0.3333", "1458.0000"] {
        assert!(text.contains(needle), "inspect output missing {needle}:\n{text}");
    }

    let out = banditlab(&["inspect", "--preset", "S2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for needle in ["1.0000", "1.0010", "1.4021", "1.1429", "1.0288"] {
        assert!(text.contains(needle), "inspect output missing {needle}:\n{text}");
    }
}

#[test]
fn simulate_emits_the_csv_contract() {
    let out = banditlab(&[
        "simulate", "--preset", "S1", "--L", "2", "--horizon", "200", "--runs", "3", "--seed",
        "11",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    let provenance = lines.next().unwrap();
    assert!(provenance.starts_with("# config_hash="));
    assert!(provenance.contains("base_seed=11"));
    assert_eq!(
        lines.next().unwrap(),
        "horizon,mean_regret,std_error,plays_1,plays_2,plays_3,plays_4,plays_5"
    );
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("200,"), "final row at the horizon: {last}");
}

#[test]
fn simulate_single_run_at_horizon_k_has_its_row() {
    let out = banditlab(&[
        "simulate", "--preset", "S1", "--horizon", "5", "--runs", "1", "--seed", "3",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("5,")), "{text}");
}

#[test]
fn simulate_is_deterministic_given_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = banditlab(&[
            "simulate",
            "--preset",
            "S2",
            "--L",
            "2",
            "--horizon",
            "400",
            "--runs",
            "8",
            "--seed",
            "99",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap(),
        "same config must produce byte-identical files"
    );
}

#[test]
fn malformed_config_exits_1_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"preset": "S1", "horizzon": 100}"#).unwrap();
    let out = banditlab(&["inspect", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("horizzon"),
        "error should name the unknown field: {}",
        stderr(&out)
    );

    let path = dir.path().join("bad2.json");
    std::fs::write(&path, r#"{"preset": "S1", "policy": {"name": "ucb", "L": -3}}"#).unwrap();
    let out = banditlab(&["simulate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("policy.L"), "{}", stderr(&out));
}

#[test]
fn invalid_chain_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chain.json");
    std::fs::write(
        &path,
        r#"{"arms": [
            {"transition": [[0.5, 0.6], [0.5, 0.5]], "rewards": [1.0, 2.0]},
            {"theta": 3.0}
        ]}"#,
    )
    .unwrap();
    let out = banditlab(&["inspect", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sums to"), "{}", stderr(&out));
}

#[test]
fn theta_outside_the_family_range_exits_2() {
    let out = banditlab(&["lower-bound", "--thetas", "3,12"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("outside (0, 10)"));
}

#[test]
fn single_arm_instance_exits_1() {
    let out = banditlab(&["inspect", "--thetas", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("2 arms"), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    let out = banditlab(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
    let out = banditlab(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("deviation-check"));
}

#[test]
fn bound_reports_the_threshold_flag() {
    let out = banditlab(&["bound", "--preset", "S1", "--L", "1458"]);
    assert!(out.status.success());
    let body: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let report = &body["report"];
    assert!((report["min_exploration"].as_f64().unwrap() - 1458.0).abs() < 1e-6);
    assert_eq!(report["condition_satisfied"], serde_json::json!(true));

    // L = 0.05 on S2 runs, but the report flags the violated condition.
    let out = banditlab(&["bound", "--preset", "S2", "--L", "0.05"]);
    assert!(out.status.success());
    let body: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(body["report"]["condition_satisfied"], serde_json::json!(false));
}

#[test]
fn bound_evaluations_follow_the_horizon_list() {
    let out = banditlab(&[
        "bound", "--preset", "S1", "--L", "2000", "--horizons", "100,10000",
    ]);
    assert!(out.status.success());
    let body: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let evals = body["evaluations"].as_array().unwrap();
    assert_eq!(evals.len(), 2);
    let b100 = evals[0]["bound"].as_f64().unwrap();
    let b10000 = evals[1]["bound"].as_f64().unwrap();
    assert!(b100 < b10000);
}

#[test]
fn lower_bound_reports_both_coefficients() {
    let out = banditlab(&["lower-bound", "--preset", "S2"]);
    assert!(out.status.success());
    let body: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let report = &body["report"];
    let full = report["lower_bound_coefficient"].as_f64().unwrap();
    let restricted = report["state1_row_coefficient"].as_f64().unwrap();
    assert!((full - 5.204981).abs() < 1e-5, "full-rate coefficient {full}");
    assert!(
        (restricted - 4.401538).abs() < 1e-5,
        "state-1-row coefficient {restricted}"
    );
    assert_eq!(report["best_theta"], serde_json::json!(7.0));

    // A non-theta instance cannot feed the lower bound.
    let out = banditlab(&["lower-bound", "--preset", "S1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("theta"), "{}", stderr(&out));
}

#[test]
fn deviation_check_emits_validation_sections() {
    let out = banditlab(&[
        "deviation-check",
        "--preset",
        "S1",
        "--arm",
        "3",
        "--runs",
        "2000",
        "--steps",
        "200",
        "--gammas",
        "5,15",
        "--seed",
        "4",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let body: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let arms = body["arms"].as_array().unwrap();
    assert_eq!(arms.len(), 1);
    assert_eq!(arms[0]["arm"], serde_json::json!(3));
    assert_eq!(arms[0]["gillman"]["entries"].as_array().unwrap().len(), 2);
    assert!(arms[0]["occupancy"]["per_state"].as_array().unwrap().len() == 2);

    let out = banditlab(&["deviation-check", "--preset", "S1", "--rule", "sometimes"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn output_path_errors_are_config_errors() {
    let out = banditlab(&[
        "simulate", "--preset", "S1", "--horizon", "10", "--runs", "1", "--out",
        "/nonexistent-dir/x.csv",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("cannot write"), "{}", stderr(&out));
}

#[test]
fn config_file_round_trips_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    std::fs::write(
        &cfg,
        r#"{
            "thetas": [1.0, 7.0, 3.0],
            "policy": {"name": "ucb", "L": 0.5},
            "horizon": 300,
            "runs": 4,
            "base_seed": 5,
            "checkpoints": [100, 300]
        }"#,
    )
    .unwrap();
    let out_path = dir.path().join("traj.csv");
    let out = banditlab(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(Path::new(&out_path)).unwrap();
    assert_eq!(text.lines().count(), 4); // provenance + header + 2 checkpoints
    assert!(text.lines().nth(2).unwrap().starts_with("100,"));
    assert!(text.lines().nth(3).unwrap().starts_with("300,"));
}
