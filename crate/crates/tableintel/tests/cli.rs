use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_tableintel");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, hands: &str, session: &str) -> (String, String) {
    let stream = dir.join(format!("{session}.jsonl"));
    let truth = dir.join(format!("{session}-truth.jsonl"));
    ok(&[
        "synth",
        "--hands",
        hands,
        "--session",
        session,
        "--out",
        s(&stream),
        "--truth",
        s(&truth),
    ]);
    (stream.to_str().unwrap().into(), truth.to_str().unwrap().into())
}

#[test]
fn bad_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["simulate", "--policy", "martingale"]).status.code(), Some(1));
    assert_eq!(
        run(&["assimilate", "--in", s(&dir.path().join("missing"))])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[rules]\ndeck_count = 0\n").unwrap();
    assert_eq!(
        run(&["--config", s(&cfg), "simulate", "--hands", "10"]).status.code(),
        Some(1)
    );
}

#[test]
fn simulate_writes_the_results_columns() {
    let out = ok(&[
        "simulate",
        "--policy",
        "basic",
        "--policy",
        "never-bust",
        "--hands",
        "20000",
    ]);
    let mut lines = out.lines();
    assert_eq!(
        lines.next(),
        Some("policy,hands,total_wagered,net,hold_pct,theo_per_hour")
    );
    assert!(lines.next().unwrap().starts_with("basic,20000,"));
    assert!(lines.next().unwrap().starts_with("never-bust,20000,"));
}

#[test]
fn derived_strategy_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("derived.csv");
    ok(&["derive-strategy", "--hands-per-cell", "1000", "--out", s(&grid)]);
    let text = fs::read_to_string(&grid).unwrap();
    assert!(text.starts_with("hand,2,3,4,5,6,7,8,9,10,A\n"));
    tableintel_core::strategy::StrategyTable::parse_grid(&text).unwrap();
    let hands = dir.path().join("hands.jsonl");
    let (stream, _) = synth(dir.path(), "10", "s");
    ok(&["assimilate", "--in", &stream, "--out", s(&hands)]);
    ok(&["analyze", "--hands", s(&hands), "--strategy", s(&grid)]);
}

#[test]
fn ingest_skips_malformed_lines_and_dedupes() {
    let dir = tempfile::tempdir().unwrap();
    let (stream, _) = synth(dir.path(), "12", "night");
    let mut text = fs::read_to_string(&stream).unwrap();
    let third = text.match_indices('\n').nth(2).unwrap().0;
    text.insert_str(third + 1, "{\"frame_index\": oops\n");
    let damaged = dir.path().join("damaged.jsonl");
    fs::write(&damaged, &text).unwrap();
    let store = dir.path().join("store");

    let out = run(&["ingest", "--in", s(&damaged), "--store", s(&store)]);
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("skipped line 4:"), "{stderr}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("stored 12 new hands, 0 duplicates, 1 lines skipped"));
    let log = fs::read(store.join("hands.jsonl")).unwrap();

    let again = ok(&["ingest", "--in", &stream, "--store", s(&store)]);
    assert!(again.contains("stored 0 new hands, 12 duplicates"), "{again}");
    assert_eq!(fs::read(store.join("hands.jsonl")).unwrap(), log);
}

#[test]
fn schema_version_mismatch_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let (stream, _) = synth(dir.path(), "3", "s");
    let text = fs::read_to_string(&stream)
        .unwrap()
        .replacen("\"schema_version\":1", "\"schema_version\":9", 1);
    let bad = dir.path().join("v9.jsonl");
    fs::write(&bad, text).unwrap();
    let out = run(&["ingest", "--in", s(&bad), "--store", s(&dir.path().join("store"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema"));
    assert!(!dir.path().join("store/hands.jsonl").exists());
}

#[test]
fn store_replay_reproduces_the_index() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    for (n, session) in [("6", "a"), ("4", "b")] {
        let (stream, _) = synth(dir.path(), n, session);
        ok(&["ingest", "--in", &stream, "--store", s(&store)]);
    }
    let index = fs::read(store.join("index.jsonl")).unwrap();
    fs::remove_file(store.join("index.jsonl")).unwrap();
    ok(&["report", "--store", s(&store), "--session", "b"]);
    assert_eq!(fs::read(store.join("index.jsonl")).unwrap(), index);
}

#[test]
fn report_is_stable_and_labels_ideal_play_expert() {
    let dir = tempfile::tempdir().unwrap();
    let (stream, _) = synth(dir.path(), "15", "evening");
    let store = dir.path().join("store");
    ok(&["ingest", "--in", &stream, "--store", s(&store)]);
    let json = dir.path().join("r.json");
    let text = dir.path().join("r.txt");
    let args = [
        "report",
        "--store",
        s(&store),
        "--session",
        "evening",
        "--json",
        s(&json),
        "--text",
        s(&text),
    ];
    ok(&args);
    let first = (fs::read(&json).unwrap(), fs::read(&text).unwrap());
    ok(&args);
    assert_eq!((fs::read(&json).unwrap(), fs::read(&text).unwrap()), first);

    let report: Value = serde_json::from_slice(&first.0).unwrap();
    let players = report["players"].as_array().unwrap();
    assert_eq!(players.len(), 5);
    for p in players {
        assert_eq!(p["skill_label"], "Expert", "{p}");
        assert_eq!(p["hands"], 15);
        assert!(p["average_bet"].as_f64().unwrap() > 0.0);
    }
    assert_eq!(report["totals"]["hands"], 15);
}

#[test]
fn empty_session_reports_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let (stream, _) = synth(dir.path(), "2", "a");
    let store = dir.path().join("store");
    ok(&["ingest", "--in", &stream, "--store", s(&store)]);
    let out = ok(&["report", "--store", s(&store), "--session", "nobody"]);
    assert!(out.starts_with("Session nobody\n  hands 0 "), "{out}");
    assert_eq!(out.lines().count(), 2);
}

#[test]
fn analyze_writes_personas_and_plot_series() {
    let dir = tempfile::tempdir().unwrap();
    let (_, truth) = synth(dir.path(), "40", "s");
    let plots = dir.path().join("counting.csv");
    let personas: Value = serde_json::from_str(&ok(&["analyze", "--hands", &truth, "--plots", s(&plots)])).unwrap();
    assert_eq!(personas.as_array().unwrap().len(), 5);
    let csv = fs::read_to_string(&plots).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("player_id,hand,scaled_count,bet,h_player,h_flatbet"));
    // Flat bets: both series coincide on every row.
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[4], cols[5], "{line}");
    }
}

#[test]
fn assimilate_reads_stdin() {
    let dir = tempfile::tempdir().unwrap();
    let (stream, truth) = synth(dir.path(), "5", "s");
    let out = Command::new(BIN)
        .args(["assimilate", "--in", "-"])
        .stdin(fs::File::open(&stream).unwrap())
        .output()
        .unwrap();
    assert!(out.status.success());
    let truth = fs::read_to_string(truth).unwrap();
    assert_eq!(
        out.stdout.iter().filter(|&&b| b == b'\n').count(),
        truth.lines().count()
    );
}
