use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn warmcg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_warmcg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = warmcg(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(dir: &Path, file: &str) -> String {
    dir.join(file).to_str().unwrap().to_string()
}

fn json(path: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn version_reports_format() {
    let out = ok(&["--version"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("warmcg 0.1.0"), "{text}");
    assert!(text.contains("format 1"), "{text}");
}

#[test]
fn toy_benchmark_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let (toy, csv, summary) = (
        p(dir.path(), "toy.jsonl"),
        p(dir.path(), "m.csv"),
        p(dir.path(), "s.json"),
    );
    ok(&["gen-toy", "--out", &toy]);
    ok(&[
        "benchmark",
        "--dataset",
        &toy,
        "--method",
        "s-learner",
        "--k",
        "1",
        "--out",
        &csv,
    ]);
    let header = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(
        header.lines().next().unwrap(),
        "instance,method,k,C,I,tau_pred_ms,tau_cg_ms,tau_milp_ms,delta_pct,objective,full_objective,match"
    );
    ok(&["report", "--in", &csv, "--out", &summary]);
    let g = &json(&summary)["groups"][0];
    assert_eq!(g["method"], "s-learner");
    assert_eq!(g["k"], 1);
    assert_eq!(g["p1"], 100.0);
    assert_eq!(g["runs"], 4);
}

#[test]
fn solve_prints_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let toy = p(dir.path(), "toy.jsonl");
    ok(&["gen-toy", "--out", &toy]);
    let out = ok(&["solve", "--dataset", &toy, "--name", "toy_b1.5"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["objective"], -0.5);
    assert_eq!(v["solution"], serde_json::json!([0.5, 1.0]));
}

#[test]
fn identify_then_predict_toy_test_instance() {
    let dir = tempfile::tempdir().unwrap();
    let (toy, sets) = (p(dir.path(), "toy.jsonl"), p(dir.path(), "sets.jsonl"));
    ok(&["gen-toy", "--out", &toy]);
    ok(&["identify", "--in", &toy, "--out", &sets]);
    let first: Value = serde_json::from_str(
        std::fs::read_to_string(&sets)
            .unwrap()
            .lines()
            .next()
            .unwrap(),
    )
    .unwrap();
    assert_eq!(
        first,
        serde_json::json!({"name": "toy_b1", "B": [2], "S": [1, 2]})
    );
    for (source, k, warm, iters) in [
        ("invariant", "1", serde_json::json!([1, 2]), 1),
        ("invariant", "3", serde_json::json!([1, 2, 3]), 1),
        ("binding", "2", serde_json::json!([2, 3]), 2),
    ] {
        let args = [
            "predict",
            "--dataset",
            &toy,
            "--sets",
            &sets,
            "--query",
            "toy_test_b1.3",
            "--source",
            source,
            "--k",
            k,
        ];
        let v: Value = serde_json::from_slice(&ok(&args).stdout).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"name": "toy_test_b1.3", "predicted": warm})
        );
        let v: Value =
            serde_json::from_slice(&ok(&[&args[..], &["--solve"]].concat()).stdout).unwrap();
        assert_eq!(v["predicted"], warm, "{source} k={k}");
        assert_eq!(v["iterations"], iters, "{source} k={k}");
        assert_eq!(v["objective"], -0.5);
    }
}

#[test]
fn corrupted_sets_file_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let (toy, sets, csv) = (
        p(dir.path(), "toy.jsonl"),
        p(dir.path(), "sets.jsonl"),
        p(dir.path(), "m.csv"),
    );
    ok(&["gen-toy", "--out", &toy]);
    ok(&["identify", "--dataset", &toy, "--out", &sets]);
    let text = std::fs::read_to_string(&sets)
        .unwrap()
        .replacen("\"S\":[1,2]", "\"S\":[1,2,99]", 1);
    std::fs::write(&sets, text).unwrap();
    let out = warmcg(&[
        "benchmark",
        "--dataset",
        &toy,
        "--sets",
        &sets,
        "--method",
        "s-learner",
        "--k",
        "1",
        "--out",
        &csv,
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("99"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(warmcg(&["gen-toy", "--bogus"]).status.code(), Some(2));
    assert_eq!(warmcg(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        warmcg(&["gen-synthetic", "--n", "3"]).status.code(),
        Some(2)
    );
    assert_eq!(
        warmcg(&["benchmark", "--method", "nope"]).status.code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let toy = p(dir.path(), "toy.jsonl");
    ok(&["gen-toy", "--out", &toy]);
    let csv = p(dir.path(), "m.csv");
    let out = warmcg(&[
        "benchmark",
        "--dataset",
        &toy,
        "--method",
        "cg",
        "--jobs",
        "0",
        "--out",
        &csv,
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = warmcg(&[
        "benchmark",
        "--dataset",
        &toy,
        "--method",
        "s-learner",
        "--out",
        &csv,
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_dataset_is_a_domain_error() {
    let out = warmcg(&["solve", "--dataset", "/nonexistent/d.jsonl", "--name", "x"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = p(dir.path(), "cfg.json");
    let (a, b, c) = (
        p(dir.path(), "a.jsonl"),
        p(dir.path(), "b.jsonl"),
        p(dir.path(), "c.jsonl"),
    );
    std::fs::write(
        &cfg,
        format!(r#"{{"n": 4, "m": 3, "T": 3, "seed": 5, "out": "{a}"}}"#),
    )
    .unwrap();
    ok(&["gen-synthetic", "--config", &cfg]);
    ok(&[
        "gen-synthetic",
        "--n",
        "4",
        "--m",
        "3",
        "--T",
        "3",
        "--seed",
        "5",
        "--out",
        &b,
    ]);
    ok(&[
        "--config",
        &cfg,
        "gen-synthetic",
        "--seed",
        "6",
        "--out",
        &c,
    ]);
    let read = |f: &str| std::fs::read(f).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert_eq!(read(&c).iter().filter(|&&x| x == b'\n').count(), 3);
    std::fs::write(&cfg, "[1, 2]").unwrap();
    assert_eq!(
        warmcg(&["gen-toy", "--config", &cfg, "--out", &a])
            .status
            .code(),
        Some(2)
    );
}

/// Drops the timing-derived columns from a metrics CSV.
fn stable_columns(path: &str) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            [&f[..5], &f[9..]].concat().join(",")
        })
        .collect()
}

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (d1, d2) = (p(dir.path(), "d1.jsonl"), p(dir.path(), "d2.jsonl"));
    for d in [&d1, &d2] {
        ok(&[
            "gen-uc", "--n", "5", "--m", "6", "--T", "12", "--seed", "9", "--out", d,
        ]);
    }
    assert_eq!(std::fs::read(&d1).unwrap(), std::fs::read(&d2).unwrap());
    let (m1, m2) = (p(dir.path(), "m1.csv"), p(dir.path(), "m2.csv"));
    let common = [
        "--method",
        "cg,b-learner,s-learner,full",
        "--k",
        "1,5",
        "--seed",
        "3",
    ];
    ok(&[&["benchmark", "--dataset", &d1, "--out", &m1][..], &common].concat());
    ok(&[
        &["benchmark", "--dataset", &d1, "--out", &m2, "--jobs", "2"][..],
        &common,
    ]
    .concat());
    let (a, b) = (stable_columns(&m1), stable_columns(&m2));
    assert_eq!(a.len(), 1 + 12 * 6);
    assert_eq!(a, b);
}
