use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seqsavage"))
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let out = bin().args(args).env_remove("SEQSAVAGE_BUDGET").output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|e| panic!("{e}: {text}"))
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("seqsavage-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn canon_emits_both_forms() {
    let r = run(&["--props", "p,q", "--F", "p|q", "canon", "--action", "do(p|q)"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r.stdout);
    for a in ["1", "2", "3", "4"] {
        assert_eq!(v["canonical_map"][a]["doA"], serde_json::json!([1, 2, 3]));
    }
    assert_eq!(v["depth"], 1);
}

#[test]
fn conditional_example_has_two_kinds_of_entries() {
    let r = run(&[
        "--props",
        "p,q,r",
        "--F",
        "r",
        "--F",
        "q",
        "--F",
        "p",
        "canon",
        "--action",
        "if p then do(r) else (do(q); do(p))",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r.stdout);
    assert!(v["canonical_map"]["1"]["doA"].is_array());
    assert!(v["canonical_map"]["8"]["doA_seq"].is_array());
}

#[test]
fn malformed_input_is_a_user_error() {
    let r = run(&["--props", "p", "canon", "--action", "do(p"]);
    assert_eq!(r.code, 1);
    assert_eq!(json(&r.stderr)["error"], "syntax");
    let r = run(&["--props", "p", "--F", "p", "canon", "--action", "do(~p)"]);
    assert_eq!(r.code, 1);
    assert_eq!(json(&r.stderr)["error"], "effect_not_in_library");
}

#[test]
fn eval_in_a_selection_model() {
    let model = scratch(
        "model.json",
        r#"{"states": ["w0", "w1"], "valuation": {"p": ["w1"]},
            "sel": [{"from": "w0", "effect_atoms": [1], "to": "w1"}]}"#,
    );
    let m = model.to_str().unwrap();
    let r = run(&[
        "--props", "p", "--F", "p", "eval", "--model", m, "--state", "w0", "--action", "noop",
    ]);
    assert_eq!(json(&r.stdout)["state"], "w0");
    let r = run(&[
        "--props", "p", "--F", "p", "eval", "--model", m, "--state", "w0", "--action", "do(p)",
    ]);
    assert_eq!(json(&r.stdout)["state"], "w1");
    let r = run(&[
        "--props", "p", "--F", "p", "eval", "--model", m, "--state", "w1", "--action", "do(p)",
    ]);
    assert_eq!(r.code, 1);
    let err = json(&r.stderr);
    assert_eq!(err["error"], "missing_selection");
    assert_eq!(err["state"], "w1");
    assert_eq!(err["effect_atoms"], serde_json::json!([1]));
}

#[test]
fn check_synthesize_verify_pipeline() {
    let prefs = scratch(
        "prefs.json",
        r#"{"props": ["p"], "F": ["p", "~p"],
            "pool": ["do(p)", "do(~p)", "noop", "do(p); do(~p)"],
            "tiers": [[0], [2], [1, 3]]}"#,
    );
    let p = prefs.to_str().unwrap();
    let r = run(&["check", "--prefs", p]);
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    assert_eq!(json(&r.stdout)["status"], "ok");

    let rep_path = prefs.with_file_name("rep.json");
    let rep = rep_path.to_str().unwrap();
    let r = run(&["synthesize", "--prefs", p, "--out", rep]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let r = run(&["verify", "--prefs", p, "--rep", rep]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    let v = json(&r.stdout);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["t_count"], "16");

    // Output is deterministic.
    let a = run(&["synthesize", "--prefs", p]).stdout;
    let b = run(&["synthesize", "--prefs", p]).stdout;
    assert_eq!(a, b);
}

#[test]
fn check_reports_violations_with_exit_two() {
    let prefs = scratch(
        "bad.json",
        r#"{"props": ["p", "q"], "F": ["p", "p & (q | ~q)"],
            "pool": ["do(p)", "do(p & (q | ~q))"], "tiers": [[0], [1]]}"#,
    );
    let r = run(&["check", "--prefs", prefs.to_str().unwrap()]);
    assert_eq!(r.code, 2);
    let v = json(&r.stdout);
    assert_eq!(v["status"], "violation");
    assert_eq!(v["exhaustive"]["n"], 1);
    let r = run(&["synthesize", "--prefs", prefs.to_str().unwrap()]);
    assert_eq!(r.code, 2);
}

#[test]
fn budget_exceeded_exits_three() {
    let prefs = scratch(
        "deep.json",
        r#"{"props": ["p", "q"], "F": ["p"], "pool": ["do(p); do(p)"], "tiers": [[0]]}"#,
    );
    let out = bin()
        .args(["synthesize", "--prefs", prefs.to_str().unwrap()])
        .env("SEQSAVAGE_BUDGET", "50")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = json(&String::from_utf8(out.stderr).unwrap());
    assert_eq!(err["error"], "budget_exceeded");
}

#[test]
fn oracle_commands() {
    let r = run(&["--props", "p,q", "oracle", "truth-table", "--formula", "p -> q"]);
    let v = json(&r.stdout);
    let values: Vec<bool> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["value"].as_bool().unwrap())
        .collect();
    assert_eq!(values, vec![true, false, true, true]);

    let r = run(&[
        "--props",
        "p",
        "--F",
        "p",
        "--F",
        "~p",
        "oracle",
        "random-prefs",
        "--seed",
        "9",
        "--size",
        "5",
    ]);
    assert_eq!(r.code, 0);
    let prefs = scratch("random.json", &r.stdout);
    let r = run(&["oracle", "cancel", "--prefs", prefs.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stdout);
}
