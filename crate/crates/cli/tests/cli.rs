use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sparsefit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparsefit"))
        .args(args)
        .env_remove("SPARSEFIT_SEED")
        .output()
        .expect("binary runs")
}

fn json_report(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.extend(["--json", "-", "--no-timestamp"]);
    let out = sparsefit(&all);
    let doc = serde_json::from_slice(&out.stdout).expect("valid JSON on stdout");
    (out.status.code().unwrap(), doc)
}

fn stat(doc: &Value, name: &str) -> f64 {
    doc["report"]["statistics"][name].as_f64().unwrap()
}

fn rejects(doc: &Value, name: &str) -> bool {
    doc["report"]["rejects"][name].as_bool().unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn rivers_table_rejects() {
    let (code, doc) = json_report(&["test", "--table", &fixture("rivers.csv"), "--header", "--model", "independence", "--alpha", "0.05"]);
    assert_eq!(code, 1);
    assert!((stat(&doc, "Q") - 14.38).abs() < 0.01);
    assert!((stat(&doc, "Gab") - 26.05).abs() < 0.5);
    assert_eq!(doc["report"]["df"], 10);
    assert!(doc["report"]["combined_reject"].as_bool().unwrap());
}

#[test]
fn builtin_and_file_agree() {
    let (_, from_file) = json_report(&["test", "--table", &fixture("rivers.csv"), "--header"]);
    let (_, builtin) = json_report(&["test", "--builtin", "rivers"]);
    assert_eq!(from_file["report"], builtin["report"]);
}

#[test]
fn sclerosis_only_gab_rejects() {
    let (code, doc) = json_report(&["test", "--builtin", "sclerosis"]);
    assert_eq!(code, 1);
    assert!(!rejects(&doc, "Q") && !rejects(&doc, "Qab") && !rejects(&doc, "G"));
    assert!(rejects(&doc, "Gab"));
}

#[test]
fn proportional_counts_accept_with_zero_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("counts.txt");
    let null = dir.path().join("null.txt");
    fs::write(&counts, "10 20 30 40\n").unwrap();
    fs::write(&null, "1, 2, 3, 4\n").unwrap();
    let (code, doc) = json_report(&["test", "--counts", counts.to_str().unwrap(), "--null", null.to_str().unwrap()]);
    assert_eq!(code, 0);
    for s in ["Q", "Qab", "G", "Gab", "RC23"] {
        assert!(stat(&doc, s).abs() < 1e-12, "{s} = {}", stat(&doc, s));
    }
    assert!(doc["report"]["correction"]["fallback"].as_bool().unwrap());
}

#[test]
fn quantile_prints_six_decimals() {
    for (args, want) in [(["0.95", "99"], "123.225221"), (["0.95", "10"], "18.307038"), (["0.5", "2"], "1.386294")] {
        let out = sparsefit(&["quantile", args[0], args[1]]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), want);
    }
}

#[test]
fn invalid_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let ragged = dir.path().join("ragged.csv");
    fs::write(&ragged, "1,2,3\n4,5\n").unwrap();
    let degenerate = dir.path().join("degenerate.csv");
    fs::write(&degenerate, "1,0\n2,0\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["quantile", "0", "3"],
        vec!["quantile", "0.5", "0"],
        vec!["test", "--table", ragged.to_str().unwrap()],
        vec!["test", "--table", degenerate.to_str().unwrap()],
        vec!["test", "--table", "/nonexistent/table.csv"],
        vec!["test", "--builtin", "rivers", "--alpha", "1.5"],
        vec!["test", "--builtin", "rivers", "--h", "0"],
        vec!["test"],
        vec!["simulate", "--dist", "f9", "--out-dir", dir.path().to_str().unwrap()],
        vec!["simulate", "--dist", "f1", "--reps", "0", "--out-dir", dir.path().to_str().unwrap()],
    ];
    for args in cases {
        let out = sparsefit(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

fn simulate(dir: &Path, args: &[&str]) -> (Value, String, String) {
    let mut all = vec!["simulate", "--out-dir", dir.to_str().unwrap(), "--no-timestamp"];
    all.extend(args);
    let out = sparsefit(&all);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let read = |f: &str| fs::read_to_string(dir.join(f)).unwrap();
    (serde_json::from_str(&read("summary.json")).unwrap(), read("quantiles.csv"), read("rejection_rates.csv"))
}

fn rate(doc: &Value, alpha: f64, stat: &str) -> f64 {
    doc["summary"]["rejection_rates"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["alpha"].as_f64() == Some(alpha))
        .unwrap()["rates"][stat]
        .as_f64()
        .unwrap()
}

#[test]
fn f2_null_keeps_qab_size_small() {
    let dir = tempfile::tempdir().unwrap();
    let (doc, _, rates) = simulate(dir.path(), &["--dist", "f2", "--null", "f2", "--n", "400", "--reps", "1000", "--seed", "42"]);
    assert!(rate(&doc, 0.05, "Qab") <= 0.03);
    assert_eq!(rates.lines().next().unwrap(), "alpha,threshold,Q,Qab,G,Gab,RC23");
    assert_eq!(rates.lines().count(), 4);
}

#[test]
fn perturbed_f1_null_gives_high_gab_power() {
    let dir = tempfile::tempdir().unwrap();
    let (doc, _, _) = simulate(dir.path(), &["--dist", "f1", "--null-perturbed", "--alpha", "0.05", "--seed", "7"]);
    assert!(rate(&doc, 0.05, "Gab") >= 0.9);
}

#[test]
fn single_replicate_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (doc, quantiles, rates) = simulate(dir.path(), &["--dist", "f3", "--reps", "1", "--alpha", "0.05"]);
    assert_eq!(quantiles.lines().count(), 2);
    assert_eq!(quantiles.lines().next().unwrap(), "c,bucket_count,q_Q,q_Qab,q_G,q_Gab,q_RC23");
    assert_eq!(rates.lines().count(), 2);
    assert_eq!(doc["summary"]["replicates"], 1);
    assert_eq!(doc["metadata"]["seed"], 42);
}

#[test]
fn seed_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sparsefit"))
        .args(["simulate", "--dist", "f1", "--reps", "2", "--no-timestamp", "--out-dir", dir.path().to_str().unwrap()])
        .env("SPARSEFIT_SEED", "123")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(doc["summary"]["seed"], 123);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--dist", "f1", "--reps", "50", "--seed", "5"];
    simulate(a.path(), &args);
    simulate(b.path(), &args);
    for f in ["summary.json", "quantiles.csv", "rejection_rates.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let first = sparsefit(&["test", "--builtin", "rivers", "--json", "-", "--no-timestamp"]);
    let second = sparsefit(&["test", "--builtin", "rivers", "--json", "-", "--no-timestamp"]);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn metadata_is_embedded_and_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = sparsefit(&["test", "--builtin", "sclerosis", "--json", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let doc: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let meta = &doc["metadata"];
    assert_eq!(meta["tool"], "sparsefit");
    assert_eq!(meta["h"], 0.1);
    assert_eq!(meta["eps"]["fraction"], 0.001);
    assert!(meta["timestamp"].is_string());
    assert_eq!(meta["input_digest"].as_str().unwrap().len(), 64);
    let report: sparsefit::TestReport = serde_json::from_value(doc["report"].clone()).unwrap();
    assert!(report.statistics.g_ab.is_finite());
}
