mod common;

use std::process::Command;

use reqrank::config::training_log_path;
use reqrank::pipeline::{self, EVAL_JSON, EVAL_TABLE};
use reqrank::{CliError, PipelineConfig};
use reqrank_core::TwoTower;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_reqrank"))
}

#[test]
fn missing_items_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::workspace(dir.path(), 30, "");
    std::fs::remove_file(dir.path().join("raw/items.jsonl")).unwrap();
    let err = pipeline::ingest(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");

    let out = bin()
        .arg("--config")
        .arg(dir.path().join("reqrank.toml"))
        .arg("ingest")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("items"));
}

#[test]
fn usage_errors_exit_two() {
    let out = bin().arg("--no-such-flag").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[train]\nepochs = 0\n").unwrap();
    let out = bin().arg("--config").arg(&cfg).arg("ingest").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(&cfg, "[train]\nnonsense = 1\n").unwrap();
    let out = bin().arg("--config").arg(&cfg).arg("ingest").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn training_before_ingest_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::workspace(dir.path(), 30, common::SMALL_TRAIN);
    assert!(matches!(pipeline::train_cmd(&cfg, None, None), Err(CliError::Usage(_))));
}

#[test]
fn reingest_with_same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::workspace(dir.path(), 150, "");
    let report = pipeline::ingest(&cfg).unwrap();
    let total = report.train.requests + report.dev.requests + report.test.requests;
    assert_eq!(total, 150);
    let positives = std::fs::read_to_string(dir.path().join("raw/interactions.jsonl"))
        .unwrap()
        .lines()
        .count();
    assert_eq!(report.negatives.added, positives);
    assert_eq!(report.train.pairs + report.dev.pairs + report.test.pairs, 2 * positives);

    let snapshot = |root: &std::path::Path| -> Vec<(std::path::PathBuf, Vec<u8>)> {
        common::files_under(root)
            .into_iter()
            .map(|p| (p.clone(), std::fs::read(&p).unwrap()))
            .collect()
    };
    let first = snapshot(&cfg.paths.corpus);
    assert!(first.len() >= 7);
    pipeline::ingest(&cfg).unwrap();
    assert_eq!(first, snapshot(&cfg.paths.corpus));

    let mut other = cfg.clone();
    other.ingest.seed = 43;
    pipeline::ingest(&other).unwrap();
    let changed = snapshot(&cfg.paths.corpus);
    let split_of = |s: &[(std::path::PathBuf, Vec<u8>)]| {
        s.iter()
            .find(|(p, _)| p.ends_with("splits/train.jsonl"))
            .unwrap()
            .1
            .clone()
    };
    assert_ne!(split_of(&first), split_of(&changed));
}

#[test]
fn zero_learning_rate_keeps_the_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let extra = common::SMALL_TRAIN.replace("[train.tower]", "lr = 0.0\n\n[train.tower]");
    let cfg = common::workspace(dir.path(), 60, &extra);
    assert_eq!(cfg.train.lr, 0.0);
    pipeline::ingest(&cfg).unwrap();
    let summary = pipeline::train_cmd(&cfg, None, None).unwrap();
    let bytes = std::fs::read(&summary.checkpoint).unwrap();
    let init = TwoTower::<f32>::init(cfg.embedding.dim, &cfg.train.tower, cfg.train.seed);
    assert_eq!(bytes, init.to_bytes());
}

#[test]
fn same_seed_gives_identical_checkpoints() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ca = common::trained(a.path(), 90);
    let cb = common::trained(b.path(), 90);
    let ckpt = |c: &PipelineConfig| c.default_model().checkpoint.clone().unwrap();
    assert_eq!(std::fs::read(ckpt(&ca)).unwrap(), std::fs::read(ckpt(&cb)).unwrap());
    assert_eq!(
        std::fs::read(training_log_path(&ckpt(&ca))).unwrap(),
        std::fs::read(training_log_path(&ckpt(&cb))).unwrap()
    );

    let mut other = ca.clone();
    other.train.seed = 7;
    let out = a.path().join("seed7.wlt");
    pipeline::train_cmd(&other, None, Some(&out)).unwrap();
    assert_ne!(std::fs::read(out).unwrap(), std::fs::read(ckpt(&ca)).unwrap());
}

#[test]
fn retraining_removes_the_stale_index() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::trained(dir.path(), 60);
    let index = cfg.default_model().index.clone().unwrap();
    assert!(index.exists());
    pipeline::train_cmd(&cfg, None, None).unwrap();
    assert!(!index.exists());
    // serving still works by building the index in memory
    let roster = reqrank::roster::Roster::load(&cfg, 1).unwrap();
    assert_eq!(roster.query("red dress", 2, None).unwrap().entries.len(), 2);
}

#[test]
fn eval_writes_report_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::trained(dir.path(), 120);
    let out = pipeline::eval_cmd(&cfg, None, None).unwrap();
    assert_eq!(out.models.len(), 3);
    assert_eq!(out.k, vec![1, 2, 3, 4]);
    for m in &out.models {
        assert!(m.report.n_requests > 0);
        assert_eq!(m.report.at_k.len(), 4);
        assert!((0.0..=1.0).contains(&m.report.ndcg));
    }
    let table = std::fs::read_to_string(cfg.paths.reports.join(EVAL_TABLE)).unwrap();
    assert!(table.starts_with("Model"));
    for col in ["PREC@1", "PREC@4", "REC@1", "REC@4", "NDCG"] {
        assert!(table.contains(col), "{table}");
    }
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(cfg.paths.reports.join(EVAL_JSON)).unwrap()).unwrap();
    assert_eq!(json["models"].as_array().unwrap().len(), 3);

    // a single model and a custom directory
    let custom = dir.path().join("elsewhere");
    let one = pipeline::eval_cmd(&cfg, Some("bm25"), Some(&custom)).unwrap();
    assert_eq!(one.models.len(), 1);
    assert!(custom.join(EVAL_JSON).exists());
}

#[test]
fn binary_runs_the_whole_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    common::workspace(dir.path(), 80, common::SMALL_TRAIN);
    let config = dir.path().join("reqrank.toml");
    let run = |args: &[&str]| {
        let out = bin().env("REQRANK_CONFIG", &config).args(args).output().unwrap();
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    };
    run(&["ingest"]);
    run(&["train"]);
    run(&["index"]);
    let table = run(&["--k", "1,2", "eval"]);
    assert!(table.contains("PREC@2") && !table.contains("PREC@3"), "{table}");
    let resp: serde_json::Value =
        serde_json::from_str(&run(&["--k", "2", "--model", "bm25", "query", "red dress"])).unwrap();
    assert_eq!(resp["entries"].as_array().unwrap().len(), 2);
    assert_eq!(resp["model_tag"], "bm25");
}
