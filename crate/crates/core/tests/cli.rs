//! End-to-end runs of the `femir` binary over temp files.

use std::path::Path;
use std::process::{Command, Output};

fn femir(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_femir"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn synth_label_query_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = femir(
        &["synth", "--seed", "1", "-n", "12", "--out", "c.jsonl"],
        dir.path(),
    );
    assert_ok(&out);
    let corpus = std::fs::read_to_string(dir.path().join("c.jsonl")).unwrap();
    assert_eq!(corpus.lines().count(), 12);

    std::fs::write(
        dir.path().join("cost.json"),
        r#"{"rcost":{"top-color":1,"bottom-color":2,"gender":3}}"#,
    )
    .unwrap();

    let out = femir(
        &[
            "label", "--corpus", "c.jsonl", "--config", "cost.json", "--out", "labels.csv",
        ],
        dir.path(),
    );
    assert_ok(&out);
    let labels = std::fs::read_to_string(dir.path().join("labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 1 + 12 * 12);
    assert!(labels.starts_with("query_id,cand_id,ced,nced,sim\n"));
    // self pairs score 1.0 exactly
    assert!(labels.contains("S0001,S0001,0.000000,0.000000,1.000000"));

    // query by example: first corpus record retrieves itself first
    let first_line = corpus.lines().next().unwrap();
    std::fs::write(dir.path().join("q.json"), first_line).unwrap();
    let out = femir(
        &[
            "query", "--corpus", "c.jsonl", "--example", "q.json", "--mode", "exact",
            "--target", "all", "--config", "cost.json",
        ],
        dir.path(),
    );
    assert_ok(&out);
    let ranking = String::from_utf8(out.stdout).unwrap();
    let mut lines = ranking.lines();
    assert_eq!(lines.next().unwrap(), "rank,id,modality,sim,ced");
    assert!(lines.next().unwrap().starts_with("1,S0001,"));
}

#[test]
fn query_by_props_and_modality_filter() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&femir(
        &["synth", "--seed", "3", "-n", "9", "--out", "c.jsonl"],
        dir.path(),
    ));
    let out = femir(
        &[
            "query", "--corpus", "c.jsonl", "--props", "gender=male,top-color=blue",
            "--target", "text",
        ],
        dir.path(),
    );
    assert_ok(&out);
    let ranking = String::from_utf8(out.stdout).unwrap();
    for row in ranking.lines().skip(1) {
        assert_eq!(row.split(',').nth(2), Some("text"), "row {row}");
    }
}

#[test]
fn index_reports_summary_and_rejects_bad_corpus() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&femir(
        &["synth", "--seed", "2", "-n", "10", "--mix", "text:0.5,image:0.5,video:0",
          "--out", "c.jsonl"],
        dir.path(),
    ));
    let out = femir(&["index", "--corpus", "c.jsonl"], dir.path());
    assert_ok(&out);
    let summary: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("summary is JSON");
    assert_eq!(summary["records"], 10);
    assert_eq!(summary["modalities"]["video"], 0);

    std::fs::write(dir.path().join("bad.jsonl"), "{\"id\":\"x\"}\n").unwrap();
    let out = femir(&["index", "--corpus", "bad.jsonl"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_computes_map_from_rankings() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&femir(
        &["synth", "--seed", "5", "-n", "15", "--out", "c.jsonl"],
        dir.path(),
    ));
    // every corpus record doubles as a query
    std::fs::copy(dir.path().join("c.jsonl"), dir.path().join("q.jsonl")).unwrap();
    assert_ok(&femir(
        &[
            "query", "--corpus", "c.jsonl", "--queries", "q.jsonl", "--out-dir", "r",
        ],
        dir.path(),
    ));
    assert_eq!(std::fs::read_dir(dir.path().join("r")).unwrap().count(), 15);
    let out = femir(
        &[
            "eval", "--rankings", "r", "--relevance", "ced", "--threshold", "3",
            "--pr-dir", "pr", "--out", "map.json",
        ],
        dir.path(),
    );
    assert_ok(&out);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("map.json")).unwrap())
            .unwrap();
    let cells = report.as_array().unwrap();
    assert!(!cells.is_empty());
    for cell in cells {
        assert_eq!(cell["target_modality"], "all");
        // gold-property exact retrieval is perfect under its own relevance
        assert!((cell["map"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
    // one PR curve per ranking, recall monotone, header in place
    let pr_files: Vec<_> = std::fs::read_dir(dir.path().join("pr")).unwrap().collect();
    assert_eq!(pr_files.len(), 15);
    let any = std::fs::read_to_string(pr_files[0].as_ref().unwrap().path()).unwrap();
    assert!(any.starts_with("recall,precision\n"));
    let recalls: Vec<f64> = any
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(recalls.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn hart_extracts_a_record() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("doc.txt"),
        "Person was a White male with medium build, wearing blue shirt and black jeans.\n",
    )
    .unwrap();
    let out = femir(
        &[
            "hart", "--input", "doc.txt", "--model", "stacked-re-taxonomy", "--theta", "0.9",
            "--id", "DOC1",
        ],
        dir.path(),
    );
    assert_ok(&out);
    let record: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(record["id"], "DOC1");
    assert_eq!(record["modality"], "text");
    let entities = record["entities"].as_array().unwrap();
    assert_eq!(entities.len(), 3);
    assert_eq!(entities[0]["attrs"]["gender"], "male");
    assert_eq!(entities[0]["attrs"]["race"], "white");
    assert_eq!(entities[1]["attrs"]["type"], "shirt");
    assert_eq!(entities[1]["attrs"]["color"], "blue");
    let relations = record["relations"].as_array().unwrap();
    assert_eq!(relations.len(), 2);
    assert_eq!(relations[0]["name"], "wearing");
}

#[test]
fn hart_without_candidates_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("doc.txt"), "He ran very fast.\n").unwrap();
    let out = femir(
        &["hart", "--input", "doc.txt", "--model", "re"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_required_flag_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = femir(&["label"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_then_learned_query() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&femir(
        &["synth", "--seed", "7", "-n", "10", "--out", "c.jsonl"],
        dir.path(),
    ));
    let out = femir(
        &[
            "train", "--corpus", "c.jsonl", "--epochs", "5", "--seed", "11",
            "--out", "model.json",
        ],
        dir.path(),
    );
    assert_ok(&out);
    let corpus = std::fs::read_to_string(dir.path().join("c.jsonl")).unwrap();
    std::fs::write(dir.path().join("q.json"), corpus.lines().next().unwrap()).unwrap();
    let out = femir(
        &[
            "query", "--corpus", "c.jsonl", "--example", "q.json", "--mode", "learned",
            "--model", "model.json",
        ],
        dir.path(),
    );
    assert_ok(&out);
    let ranking = String::from_utf8(out.stdout).unwrap();
    assert_eq!(ranking.lines().next().unwrap(), "rank,id,modality,sim");
    assert_eq!(ranking.lines().count(), 11);
}
