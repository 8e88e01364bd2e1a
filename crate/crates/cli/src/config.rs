//! TOML pipeline configuration. Relative paths resolve against the directory
//! holding the config file.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use reqrank_core::corpus::SplitSpec;
use reqrank_core::eval::{Averaging, PoolPolicy};
use reqrank_core::rank::Bm25Params;
use reqrank_core::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CONFIG_ENV: &str = "REQRANK_CONFIG";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub ingest: IngestConfig,
    pub embedding: EmbeddingConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub serve: ServeConfig,
    pub models: Vec<ModelEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Raw inputs for `ingest`: either requests + interactions, or reviews.
    pub requests: Option<PathBuf>,
    pub items: Option<PathBuf>,
    pub interactions: Option<PathBuf>,
    pub reviews: Option<PathBuf>,
    /// Category lexicon; the bundled garment lexicon when unset.
    pub lexicon: Option<PathBuf>,
    /// Where `ingest` writes the normalized corpus and its splits.
    pub corpus: PathBuf,
    pub checkpoints: PathBuf,
    pub reports: PathBuf,
    pub feedback: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            requests: None,
            items: None,
            interactions: None,
            reviews: None,
            lexicon: None,
            corpus: "work/corpus".into(),
            checkpoints: "work/models".into(),
            reports: "work/reports".into(),
            feedback: "work/feedback.jsonl".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub negative_ratio: f64,
    pub seed: u64,
    pub split: SplitSpec,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            negative_ratio: 1.0,
            seed: 42,
            split: SplitSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    /// Hash embedder settings; `dim` is ignored when files are given.
    pub dim: usize,
    pub seed: u64,
    /// Precomputed EMB1 stores. Both or neither.
    pub requests: Option<PathBuf>,
    pub items: Option<PathBuf>,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            dim: reqrank_core::embed::DEFAULT_HASH_DIM,
            seed: reqrank_core::embed::DEFAULT_HASH_SEED,
            requests: None,
            items: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Dev,
    #[default]
    Test,
}

impl SplitName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Train => "train",
            Self::Dev => "dev",
            Self::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub k: Vec<usize>,
    pub split: SplitName,
    pub pool: PoolPolicy,
    pub averaging: Averaging,
    /// Seeds pool sampling and the random baseline.
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            k: vec![1, 2, 3, 4],
            split: SplitName::Test,
            pool: PoolPolicy::Labeled,
            averaging: Averaging::Macro,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub host: String,
    pub port: u16,
    /// Built console assets, served at `/` when set.
    pub console_dir: Option<PathBuf>,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            console_dir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModelKind {
    Wlite,
    Bm25,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub tag: String,
    pub kind: ModelKind,
    /// WLITE: trained towers.
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    /// WLITE: dense index (EMB1). BM25: index file. Built on the fly when absent.
    #[serde(default)]
    pub index: Option<PathBuf>,
    /// RANDOM: permutation seed; `eval.seed` when unset.
    #[serde(default)]
    pub seed: Option<u64>,
    /// BM25 parameters.
    #[serde(default)]
    pub bm25: Bm25Params,
    #[serde(default)]
    pub default: bool,
}

impl PipelineConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))?;
        cfg.resolve(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        Self::from_toml(&text, dir)
    }

    /// `--config`, then `$REQRANK_CONFIG`, then built-in defaults rooted at
    /// the working directory.
    pub fn discover(explicit: Option<&Path>) -> Result<Self, CliError> {
        if let Some(p) = explicit {
            return Self::load(p);
        }
        if let Some(p) = std::env::var_os(CONFIG_ENV) {
            return Self::load(Path::new(&p));
        }
        let mut cfg = Self::default();
        cfg.resolve(Path::new("."));
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let p = &mut self.paths;
        for p in [
            &mut p.requests,
            &mut p.items,
            &mut p.interactions,
            &mut p.reviews,
            &mut p.lexicon,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        for req in [&mut p.corpus, &mut p.checkpoints, &mut p.reports, &mut p.feedback] {
            fix(req);
        }
        for p in [
            &mut self.embedding.requests,
            &mut self.embedding.items,
            &mut self.serve.console_dir,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        if self.models.is_empty() {
            self.models = default_roster();
        }
        let checkpoints = self.paths.checkpoints.clone();
        for m in &mut self.models {
            for p in [&mut m.checkpoint, &mut m.index].into_iter().flatten() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
            if m.kind == ModelKind::Wlite && m.checkpoint.is_none() {
                m.checkpoint = Some(checkpoints.join(format!("{}.wlt", m.tag)));
            }
            if m.index.is_none() {
                m.index = match m.kind {
                    ModelKind::Wlite => Some(checkpoints.join(format!("{}.index.emb", m.tag))),
                    ModelKind::Bm25 => Some(checkpoints.join(format!("{}.bm25", m.tag))),
                    ModelKind::Random => None,
                };
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let mut tags = HashSet::new();
        for m in &self.models {
            if m.tag.is_empty() || !tags.insert(m.tag.as_str()) {
                return Err(CliError::usage(format!(
                    "model tags must be nonempty and unique: {:?}",
                    m.tag
                )));
            }
            m.bm25
                .validate()
                .map_err(|e| CliError::usage(format!("model {}: {e}", m.tag)))?;
        }
        let defaults = self.models.iter().filter(|m| m.default).count();
        if defaults != 1 {
            return Err(CliError::usage(format!(
                "exactly one model must be marked default, found {defaults}"
            )));
        }
        if self.embedding.requests.is_some() != self.embedding.items.is_some() {
            return Err(CliError::usage(
                "embedding.requests and embedding.items must be set together",
            ));
        }
        if self.embedding.dim < 8 {
            return Err(CliError::usage("embedding.dim must be at least 8"));
        }
        if !(self.ingest.negative_ratio.is_finite() && self.ingest.negative_ratio >= 0.0) {
            return Err(CliError::usage("ingest.negative_ratio must be finite and nonnegative"));
        }
        self.ingest
            .split
            .validate()
            .map_err(|e| CliError::usage(e.to_string()))?;
        if self.eval.k.is_empty() || self.eval.k.contains(&0) {
            return Err(CliError::usage("eval.k must be a nonempty list of positive integers"));
        }
        if let PoolPolicy::Sampled { size: 0 } = self.eval.pool {
            return Err(CliError::usage("eval.pool.size must be positive"));
        }
        self.train.validate().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(())
    }

    pub fn default_model(&self) -> &ModelEntry {
        self.models.iter().find(|m| m.default).expect("validated")
    }

    pub fn model(&self, tag: &str) -> Option<&ModelEntry> {
        self.models.iter().find(|m| m.tag == tag)
    }

    pub fn corpus_file(&self, name: &str) -> PathBuf {
        self.paths.corpus.join(name)
    }

    pub fn split_file(&self, split: SplitName) -> PathBuf {
        self.paths
            .corpus
            .join("splits")
            .join(format!("{}.jsonl", split.as_str()))
    }
}

fn default_roster() -> Vec<ModelEntry> {
    let entry = |tag: &str, kind, default| ModelEntry {
        tag: tag.into(),
        kind,
        checkpoint: None,
        index: None,
        seed: None,
        bm25: Bm25Params::default(),
        default,
    };
    vec![
        entry("wlite", ModelKind::Wlite, true),
        entry("bm25", ModelKind::Bm25, false),
        entry("random", ModelKind::Random, false),
    ]
}

/// Log file written next to a checkpoint.
pub fn training_log_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("log.json")
}
