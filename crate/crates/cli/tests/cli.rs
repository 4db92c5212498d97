use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const INITIAL: &str =
    r#"{"atoms":{"9":{"0":"18/1","1":"6/1"},"0":{"1":"6/1"}},"mints":{},"amms":{}}"#;
const CREATE: &str = r#"{"kind":"create","account":9,"t0":0,"t1":1,"x0":"18/1","x1":"6/1"}"#;
const SWAP: &str = r#"{"kind":"swap","account":0,"input":1,"output":0,"x":"6/1"}"#;
const ORACLE: &str = r#"{"prices":{"0":"3/1","1":"4/1"}}"#;

fn cpamm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpamm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, lines: &[&str]) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn replay_example_trace() {
    let dir = TempDir::new().unwrap();
    let trace = write(&dir, "t.jsonl", &[INITIAL, CREATE, SWAP]);
    let out = cpamm(&["replay", s(&trace)]);
    assert_eq!(out.status.code(), Some(0));
    let state: Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(state["amms"]["0-1"], serde_json::json!(["9/1", "12/1"]));
    assert_eq!(state["atoms"]["0"]["0"], "9/1");
}

#[test]
fn replay_all_prints_every_state() {
    let dir = TempDir::new().unwrap();
    let trace = write(&dir, "t.jsonl", &[INITIAL, CREATE, SWAP]);
    let out = cpamm(&["replay", s(&trace), "--all"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 3);
}

#[test]
fn replay_gain_sums_to_total() {
    let dir = TempDir::new().unwrap();
    let trace = write(&dir, "t.jsonl", &[INITIAL, CREATE, SWAP]);
    let oracle = write(&dir, "o.json", &[ORACLE]);
    for account in ["0", "9"] {
        let out = cpamm(&[
            "replay",
            s(&trace),
            "--oracle",
            s(&oracle),
            "--gain",
            account,
        ]);
        assert_eq!(out.status.code(), Some(0));
        let lines: Vec<Value> = stdout(&out)
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines.len(), 3);
        let total = lines[2]["total"].as_str().unwrap();
        let expected = if account == "0" { "3/1" } else { "-3/1" };
        assert_eq!(total, expected);
        assert_eq!(lines[1]["gain"], expected);
        assert_eq!(lines[0]["gain"], "0/1");
    }
}

#[test]
fn replay_gain_without_oracle_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let trace = write(&dir, "t.jsonl", &[INITIAL, CREATE, SWAP]);
    assert_eq!(
        cpamm(&["replay", s(&trace), "--gain", "0"]).status.code(),
        Some(2)
    );
}

#[test]
fn replay_invalid_step_exits_one_with_json() {
    let dir = TempDir::new().unwrap();
    let trace = write(&dir, "t.jsonl", &[INITIAL, SWAP]);
    let out = cpamm(&["replay", s(&trace)]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "step_invalid");
    assert_eq!(err["step"], 1);
}

#[test]
fn missing_or_malformed_input_exits_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        cpamm(&["replay", "/nonexistent/trace.jsonl"]).status.code(),
        Some(2)
    );
    let bad = write(
        &dir,
        "bad.jsonl",
        &[INITIAL, r#"{"kind":"swap","x":"1/0"}"#],
    );
    assert_eq!(cpamm(&["replay", s(&bad)]).status.code(), Some(2));
    assert_eq!(cpamm(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn arb_example_exact_json() {
    let dir = TempDir::new().unwrap();
    let trace = write(&dir, "t.jsonl", &[INITIAL, CREATE]);
    let state = cpamm(&["replay", s(&trace)]);
    let state_path = write(&dir, "s.json", &[stdout(&state).trim()]);
    let oracle = write(&dir, "o.json", &[ORACLE]);
    let out = cpamm(&[
        "arb",
        "--state",
        s(&state_path),
        "--oracle",
        s(&oracle),
        "--pool",
        "0-1",
        "--account",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out).trim(),
        r#"{"pool":"0-1","direction":[1,0],"x":"3/1","y":"6/1","gain":"6/1","post_ratio":"3/4"}"#
    );

    let out = cpamm(&[
        "arb",
        "--state",
        s(&state_path),
        "--oracle",
        s(&oracle),
        "--pool",
        "1-0",
        "--account",
        "0",
        "--decimals",
        "2",
    ]);
    let v: Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["x"], "3/1");
    assert_eq!(v["x_approx"], "3.00");
    assert_eq!(v["post_ratio_approx"], "0.75");
}

#[test]
fn arb_aligned_pool_prints_null() {
    let dir = TempDir::new().unwrap();
    let trace = write(
        &dir,
        "t.jsonl",
        &[
            INITIAL,
            CREATE,
            r#"{"kind":"swap","account":0,"input":1,"output":0,"x":"3/1"}"#,
        ],
    );
    let state = cpamm(&["replay", s(&trace)]);
    let state_path = write(&dir, "s.json", &[stdout(&state).trim()]);
    let oracle = write(&dir, "o.json", &[ORACLE]);
    let out = cpamm(&[
        "arb",
        "--state",
        s(&state_path),
        "--oracle",
        s(&oracle),
        "--pool",
        "0-1",
        "--account",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "null");
}

#[test]
fn arb_bad_pool_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let state_path = write(&dir, "s.json", &[INITIAL]);
    let oracle = write(&dir, "o.json", &[ORACLE]);
    let out = cpamm(&[
        "arb",
        "--state",
        s(&state_path),
        "--oracle",
        s(&oracle),
        "--pool",
        "1-1",
        "--account",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = cpamm(&[
        "arb",
        "--state",
        s(&state_path),
        "--oracle",
        s(&oracle),
        "--pool",
        "0-1",
        "--account",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gen_zero_steps_is_valid_initial_state() {
    let out = cpamm(&["gen", "--steps", "0", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1);
    let trace = cpamm::Trace::from_jsonl(&text).unwrap();
    assert!(trace.initial.valid_init());
    assert!(trace.steps.is_empty());
}

#[test]
fn gen_then_replay_round_trip() {
    let dir = TempDir::new().unwrap();
    for seed in 0..5 {
        let path = dir.path().join(format!("g{seed}.jsonl"));
        let seed = seed.to_string();
        let out = cpamm(&[
            "gen",
            "--seed",
            &seed,
            "--steps",
            "30",
            "--accounts",
            "3",
            "--tokens",
            "3",
            "--out",
            s(&path),
        ]);
        assert_eq!(out.status.code(), Some(0));
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 31);
        assert_eq!(cpamm(&["replay", s(&path)]).status.code(), Some(0));
        assert_eq!(cpamm(&["check", s(&path)]).status.code(), Some(0));
    }
}

#[test]
fn gen_is_deterministic_and_flags_override_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", &[r#"{"seed":3,"n_steps":4}"#]);
    let a = cpamm(&["gen", "--config", s(&cfg)]);
    let b = cpamm(&["gen", "--config", s(&cfg)]);
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&a).lines().count(), 5);
    let c = cpamm(&["gen", "--config", s(&cfg), "--steps", "2"]);
    assert_eq!(stdout(&c).lines().count(), 3);
    assert_eq!(cpamm(&["gen", "--accounts", "0"]).status.code(), Some(2));
    // One token can never form a pool, so generation stalls.
    assert_eq!(
        cpamm(&["gen", "--tokens", "1", "--steps", "1"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn generated_gains_sum_to_total() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("g.jsonl");
    cpamm(&["gen", "--seed", "11", "--steps", "40", "--out", s(&path)]);
    let oracle = write(
        &dir,
        "o.json",
        &[r#"{"prices":{"0":"3/1","1":"5/2","2":"7/3"}}"#],
    );
    for account in ["0", "1", "2", "3"] {
        let out = cpamm(&[
            "replay",
            s(&path),
            "--oracle",
            s(&oracle),
            "--gain",
            account,
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let lines: Vec<Value> = stdout(&out)
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        let sum: cpamm::Rational = lines[..lines.len() - 1]
            .iter()
            .map(|l| {
                l["gain"]
                    .as_str()
                    .unwrap()
                    .parse::<cpamm::Rational>()
                    .unwrap()
            })
            .sum();
        let total: cpamm::Rational = lines.last().unwrap()["total"]
            .as_str()
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(sum, total);
    }
}

#[test]
fn check_and_lemmas_campaigns_pass() {
    let out = cpamm(&[
        "check", "--seed", "5", "--traces", "4", "--steps", "20", "--jobs", "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(stdout(&out).lines().next().unwrap()).unwrap();
    assert_eq!(report["states_checked"], 84);
    assert!(report["violations"].as_array().unwrap().is_empty());

    let dir = TempDir::new().unwrap();
    let oracle = write(
        &dir,
        "o.json",
        &[r#"{"prices":{"0":"3/1","1":"5/2","2":"7/3"}}"#],
    );
    let out = cpamm(&[
        "check",
        "--lemmas",
        "--oracle",
        s(&oracle),
        "--traces",
        "2",
        "--steps",
        "20",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = cpamm(&[
        "lemmas", "--seed", "9", "--traces", "3", "--swaps", "2", "--grid", "200", "--jobs", "1",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("all properties hold"));
    assert_eq!(
        cpamm(&["check", "--lemmas", "--traces", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(cpamm(&["lemmas", "--grid", "1"]).status.code(), Some(2));
}

#[test]
fn check_reports_broken_trace() {
    let dir = TempDir::new().unwrap();
    let trace = write(
        &dir,
        "t.jsonl",
        &[r#"{"atoms":{"0":{"0":"1/1"}},"mints":{},"amms":{"0-1":["1/1","1/1"]}}"#],
    );
    let out = cpamm(&["check", s(&trace)]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "violations");
}
