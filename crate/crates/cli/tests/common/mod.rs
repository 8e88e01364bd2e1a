#![allow(dead_code)]

use std::path::{Path, PathBuf};

use reqrank::pipeline;
use reqrank::PipelineConfig;
use reqrank_core::corpus::synthetic::SyntheticSpec;

pub const SMALL_TRAIN: &str = r#"
[embedding]
dim = 32

[train]
epochs = 2
batch_size = 16

[train.tower]
hidden = [32]
out_dim = 16
"#;

/// Synthetic raw files under `dir/raw` plus a config at `dir/reqrank.toml`.
pub fn workspace(dir: &Path, requests: usize, extra: &str) -> PipelineConfig {
    let spec = SyntheticSpec {
        requests,
        items_per_category: 2,
        ..SyntheticSpec::default()
    };
    pipeline::synth(&spec, &dir.join("raw")).unwrap();
    let text = format!(
        "[paths]\nrequests = \"raw/requests.jsonl\"\nitems = \"raw/items.jsonl\"\ninteractions = \"raw/interactions.jsonl\"\n{extra}"
    );
    let path = dir.join("reqrank.toml");
    std::fs::write(&path, text).unwrap();
    PipelineConfig::load(&path).unwrap()
}

/// Ingested, trained and indexed.
pub fn trained(dir: &Path, requests: usize) -> PipelineConfig {
    let cfg = workspace(dir, requests, SMALL_TRAIN);
    pipeline::ingest(&cfg).unwrap();
    pipeline::train_cmd(&cfg, None, None).unwrap();
    pipeline::index_cmd(&cfg, None).unwrap();
    cfg
}

pub fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}
