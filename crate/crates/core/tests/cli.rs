use std::path::{Path, PathBuf};
use std::process::Command;

use paracoref::evaluation::{average_precision, RankedItem, RankedList};
use paracoref::features::{LabeledDataset, Split};
use paracoref::forest::Forest;
use paracoref::synth::{synthetic_corpus, CorpusConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_paracoref"))
}

#[test]
fn unknown_subcommand_exits_with_usage_error() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_error_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["--out", dir.path().to_str().unwrap(), "--corpus"])
        .arg(dir.path().join("missing"))
        .arg("ingest")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

fn run(dir: &Path, args: &[&str]) {
    let d = |s: &str| -> PathBuf { dir.join(s) };
    let out = bin()
        .arg("--out")
        .arg(d("out"))
        .arg("--corpus")
        .arg(d("corpus"))
        .arg("--decisions")
        .arg(d("corpus/decisions.jsonl"))
        .arg("--annotations")
        .arg(d("corpus/annotations.jsonl"))
        .arg("--judgments")
        .arg(d("corpus/judgments.csv"))
        .arg("--splits")
        .arg(d("corpus/splits.csv"))
        .args(["--seed", "3", "--resamples", "1000"])
        .args(args)
        .output()
        .unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn evaluate_reports_the_ap_of_the_trained_forest() {
    let dir = tempfile::tempdir().unwrap();
    let s = synthetic_corpus(&CorpusConfig { entries: 250, seed: 3, ..Default::default() }).unwrap();
    std::fs::create_dir_all(dir.path().join("corpus")).unwrap();
    s.write(&dir.path().join("corpus")).unwrap();
    for step in ["labels", "features", "train", "rank", "evaluate", "significance"] {
        run(dir.path(), &[step]);
    }
    let out = dir.path().join("out");
    let forest = Forest::load(&out.join("forest.json")).unwrap();
    let data = LabeledDataset::load(&out.join("dataset.csv")).unwrap().split(Split::Test);
    let items = data
        .rows
        .iter()
        .map(|r| RankedItem {
            id: r.id.clone(),
            score: forest.predict_proba(r.features.as_slice()).unwrap(),
            label: r.label,
        })
        .collect();
    let direct = average_precision(&RankedList::new(items).unwrap()).unwrap();
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    let reported = metrics["forest"]["average_precision"].as_f64().unwrap();
    assert!((direct - reported).abs() < 1e-12, "{direct} vs {reported}");
    let sig: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("significance.json")).unwrap()).unwrap();
    let p = sig["permutation_p"].as_f64().unwrap();
    assert!(p > 0.0 && p <= 1.0);
}
