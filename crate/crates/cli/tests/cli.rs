mod common;

use std::collections::BTreeSet;

use common::{experiment_id, fixture, tempdir, write_experiment, ServerProcess, SWAP_CONDITION};

#[test]
fn setup_prints_the_schedule_and_writes_tokens() {
    let dir = tempdir();
    let server = ServerProcess::start(dir.path());
    let cli = server.cli();

    let config = write_experiment(dir.path(), "pair", 2, 1, SWAP_CONDITION);
    let summary = cli.json(dir.path(), &["setup", config.to_str().unwrap()]);
    assert_eq!(summary["pairs"], 1);
    assert_eq!(summary["rounds"][0][0], serde_json::json!(["P01", "P02"]));

    let tokens = std::fs::read_to_string(dir.path().join("tokens.json")).unwrap();
    let tokens: serde_json::Value = serde_json::from_str(&tokens).unwrap();
    assert_eq!(tokens["participants"].as_array().unwrap().len(), 2);
    assert_eq!(tokens["participants"][0]["label"], "P01");
}

#[test]
fn setup_accepts_the_maximum_round_count() {
    let dir = tempdir();
    let server = ServerProcess::start(dir.path());
    let config = write_experiment(dir.path(), "full", 12, 11, SWAP_CONDITION);
    let summary = server.cli().json(dir.path(), &["setup", config.to_str().unwrap()]);
    assert_eq!(summary["pairs"], 66);
    assert_eq!(summary["distinct_pairs"], 66);

    let too_many = write_experiment(dir.path(), "over", 12, 12, SWAP_CONDITION);
    let out = server.cli().run(dir.path(), &["setup", too_many.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("INFEASIBLE"));
}

#[test]
fn simulate_identity_dyad_gives_identical_transcripts() {
    let dir = tempdir();
    let server = ServerProcess::start(dir.path());
    let cli = server.cli();
    cli.ok(dir.path(), &["setup", fixture("identity_dyad.toml").to_str().unwrap()]);
    let exp = experiment_id(dir.path(), "tokens.json");
    cli.ok(dir.path(), &["start-round", &exp, "0"]);

    let report = cli.json(dir.path(), &["simulate", fixture("swap_dyad_script.toml").to_str().unwrap()]);
    let conv = &report["conversations"][0];
    assert_eq!(conv["messages"], 6);
    assert_eq!(conv["altered_deliveries"], 0);
    assert_eq!(conv["views"]["Alice"], conv["views"]["Bob"]);
    assert!(report["mismatches"].as_array().unwrap().is_empty());
}

#[test]
fn simulate_rejects_unknown_labels_before_connecting() {
    let dir = tempdir();
    std::fs::write(
        dir.path().join("tokens.json"),
        r#"{"experiment_id":"exp_x","participants":[{"label":"Alice","participant_id":"pt_1","token":"t"}]}"#,
    )
    .unwrap();
    std::fs::write(dir.path().join("script.toml"), "[[agents]]\nlabel = \"Mallory\"\n").unwrap();
    // Nothing listens on this port; reaching the network would be a transport error (5).
    let cli = common::Cli {
        server: "http://127.0.0.1:9".into(),
    };
    let out = cli.run(dir.path(), &["simulate", "script.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Mallory"));
}

#[test]
fn export_is_stable_redactable_and_grows_by_prefix() {
    let dir = tempdir();
    let server = ServerProcess::start(dir.path());
    let cli = server.cli();
    cli.ok(dir.path(), &["setup", fixture("swap_dyad.toml").to_str().unwrap()]);
    let exp = experiment_id(dir.path(), "tokens.json");
    cli.ok(dir.path(), &["start-round", &exp, "0"]);
    let early = cli.ok(dir.path(), &["export", &exp]);

    cli.ok(dir.path(), &["simulate", fixture("swap_dyad_script.toml").to_str().unwrap()]);
    cli.ok(dir.path(), &["export", &exp, "--out", "a.jsonl"]);
    cli.ok(dir.path(), &["export", &exp, "--out", "b.jsonl"]);
    let a = std::fs::read(dir.path().join("a.jsonl")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.jsonl")).unwrap());

    // Each view of the early export is a prefix of the same view later.
    let lines = |text: &str, owner: &str| -> Vec<String> {
        text.lines()
            .filter(|l| l.contains(&format!("\"view_owner\":\"{owner}\"")))
            .map(str::to_owned)
            .collect()
    };
    let full = String::from_utf8(a).unwrap();
    let owners: BTreeSet<String> = full
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["view_owner"].as_str().unwrap().to_owned())
        .collect();
    assert_eq!(owners.len(), 2);
    for owner in &owners {
        let (before, after) = (lines(&early, owner), lines(&full, owner));
        assert_eq!(before.len(), 1);
        assert_eq!(after[..before.len()], before[..]);
    }

    let redacted = cli.ok(dir.path(), &["export", &exp, "--redact-names"]);
    for name in ["Alice", "Bob"] {
        assert!(!redacted.contains(name), "{name} leaked into redacted export");
    }
    assert!(redacted.contains("participant-01"));
}

#[test]
fn errors_use_distinct_exit_codes() {
    let dir = tempdir();
    let server = ServerProcess::start(dir.path());
    let cli = server.cli();

    let api = cli.run(dir.path(), &["integrity", "exp_missing"]);
    assert_eq!(api.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&api.stderr).contains("NOT_FOUND"));

    let io = cli.run(dir.path(), &["setup", "does-not-exist.toml"]);
    assert_eq!(io.status.code(), Some(4));

    let unreachable = common::Cli {
        server: "http://127.0.0.1:9".into(),
    };
    assert_eq!(unreachable.run(dir.path(), &["integrity", "exp_x"]).status.code(), Some(5));

    let wrong_token = std::process::Command::new(common::bin())
        .args(["--server", &server.url, "--admin-token", "nope", "integrity", "exp_x"])
        .output()
        .unwrap();
    assert_eq!(wrong_token.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&wrong_token.stderr).contains("AUTH"));
}

#[test]
fn integrity_and_close_round_report_over_the_api() {
    let dir = tempdir();
    let server = ServerProcess::start(dir.path());
    let cli = server.cli();
    cli.ok(dir.path(), &["setup", fixture("swap_dyad.toml").to_str().unwrap()]);
    let exp = experiment_id(dir.path(), "tokens.json");
    cli.ok(dir.path(), &["start-round", &exp, "0"]);
    cli.ok(dir.path(), &["simulate", fixture("swap_dyad_script.toml").to_str().unwrap()]);

    let report = cli.json(dir.path(), &["integrity", &exp]);
    assert_eq!(report["messages"], 6);
    assert_eq!(report["deliveries"], 6);
    assert!(report["violations"].as_array().unwrap().is_empty());

    let closed = cli.json(dir.path(), &["close-round", &exp, "0"]);
    assert_eq!(closed["conversation_ids"].as_array().unwrap().len(), 1);
    // Scripts cannot run once nothing is open.
    let out = cli.run(dir.path(), &["simulate", fixture("swap_dyad_script.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
