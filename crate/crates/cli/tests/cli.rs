use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn varord(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varord"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = varord(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const TINY_EXPERIMENT: &str = r#"{
  "cv_folds": 2,
  "families": ["knn", "dt"],
  "grids": {
    "knn": [{"family": "knn", "k": 3}],
    "dt": [{"family": "dt", "max_depth": 4, "min_samples_split": 2}]
  }
}"#;

#[test]
fn end_to_end_commands() {
    let tmp = tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("gen.json"), r#"{"count": 40, "exclude_ties": true}"#).unwrap();
    ok(d, &["generate", "--out", "roots.jsonl", "--config", "gen.json", "--seed", "2"]);
    ok(d, &["label", "--in", "roots.jsonl", "--out", "labeled.jsonl"]);
    let text = ok(d, &["augment", "--in", "labeled.jsonl", "--out", "aug.csv"]);
    assert!(text.contains("[40, 40, 40, 40, 40, 40]"), "{text}");
    assert_eq!(
        std::fs::read_to_string(d.join("aug.distribution.csv")).unwrap(),
        "label,count\n0,40\n1,40\n2,40\n3,40\n4,40\n5,40\n"
    );
    assert!(d.join("aug.summary.json").exists());

    let text = ok(d, &["split", "--in", "aug.csv", "--out", "orbit", "--mode", "orbit", "--seed", "1"]);
    assert!(text.contains("orbit leakage 0.0000"), "{text}");
    let text = ok(d, &["split", "--in", "aug.csv", "--out", "rand", "--seed", "1"]);
    let leak: f64 = text.rsplit(' ').next().unwrap().trim().parse().unwrap();
    assert!(leak > 0.9, "{text}");

    ok(d, &["train", "--in", "orbit/train.csv", "--out", "m.json", "--family", "dt"]);
    let text = ok(d, &["evaluate", "--in", "orbit/test.csv", "--model", "m.json"]);
    let acc: f64 = text.trim().trim_start_matches("accuracy ").parse().unwrap();
    assert!((0.0..=1.0).contains(&acc));

    std::fs::write(d.join("exp.json"), TINY_EXPERIMENT).unwrap();
    let text = ok(
        d,
        &["experiment", "--in", "labeled.jsonl", "--in", "aug.csv", "--out", "exp", "--config", "exp.json"],
    );
    assert!(text.contains("### Trained on labeled") && text.contains("### Trained on aug"));
    let csv = std::fs::read_to_string(d.join("exp/report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    assert!(d.join("exp/models/aug_dt.json").exists());
}

#[test]
fn featurize_twice_is_byte_identical() {
    let tmp = tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("gen.json"), r#"{"count": 10}"#).unwrap();
    ok(d, &["generate", "--out", "p.jsonl", "--config", "gen.json"]);
    ok(d, &["featurize", "--in", "p.jsonl", "--out", "a.csv"]);
    ok(d, &["featurize", "--in", "p.jsonl", "--out", "b.csv"]);
    assert_eq!(std::fs::read(d.join("a.csv")).unwrap(), std::fs::read(d.join("b.csv")).unwrap());
    let header = std::fs::read_to_string(d.join("a.csv")).unwrap();
    let cols = header.lines().next().unwrap().split(',').filter(|c| c.starts_with('f')).count();
    assert_eq!(cols, 11);
}

#[test]
fn bad_record_exits_two_and_names_it() {
    let tmp = tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(
        d.join("p.jsonl"),
        "{\"id\":\"ok\",\"orbit_id\":\"ok\",\"perm\":[0,1,2],\"system\":\"vars 3; x1 + x2*x3\"}\n\
         {\"id\":\"broken7\",\"orbit_id\":\"broken7\",\"perm\":[0,1,2],\"system\":\"vars 3; x1 +* x2\"}\n",
    )
    .unwrap();
    let out = varord(d, &["featurize", "--in", "p.jsonl", "--out", "f.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken7"));
}

#[test]
fn exit_codes() {
    let tmp = tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(varord(d, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        varord(d, &["featurize", "--in", "missing.jsonl", "--out", "f.csv"]).status.code(),
        Some(1)
    );
    std::fs::write(d.join("bad.json"), r#"{"count": 0, "min_polys": 9}"#).unwrap();
    assert_eq!(
        varord(d, &["generate", "--out", "x.jsonl", "--config", "bad.json"]).status.code(),
        Some(2)
    );
    std::fs::write(d.join("typo.json"), r#"{"cv_fold": 3}"#).unwrap();
    assert_eq!(
        varord(d, &["repro-bias-study", "--out", "o", "--config", "typo.json"]).status.code(),
        Some(2)
    );
}

#[test]
fn costs_reports_symmetric_tie() {
    let tmp = tempdir().unwrap();
    let text = ok(tmp.path(), &["costs", "vars 3; x1 + x2 + x3"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["table"]["argmin_label"], 0);
    assert_eq!(v["table"]["tie"], true);
    assert_eq!(v["table"]["costs"].as_array().unwrap().len(), 6);
}
