//! The set of servable models and the free-text query path.

use std::time::Instant;

use indexmap::IndexMap;
use reqrank_core::corpus::{tag_categories, CategoryLexicon};
use reqrank_core::embed::{BaseEmbeddings, HashEmbedder};
use reqrank_core::hashing::fnv1a;
use reqrank_core::rank::{random_rank, Bm25Index, DenseIndex, RankError, RankedList};
use reqrank_core::{Corpus, ItemDescription, TextRequest, TwoTower};
use serde::{Deserialize, Serialize};

use crate::config::{ModelEntry, ModelKind, PipelineConfig};
use crate::data;
use crate::error::CliError;

pub enum Scorer {
    Wlite { model: TwoTower<f32>, index: DenseIndex },
    Bm25(Bm25Index),
    Random { seed: u64 },
}

/// What a scorer needs to know about a request.
pub struct RequestView<'a> {
    pub id: &'a str,
    pub tokens: &'a [String],
    /// Base embedding; required by WLITE.
    pub base: Option<&'a [f32]>,
}

impl Scorer {
    /// Loads or builds the artifacts of a roster entry over `catalog`. With
    /// `use_index_files` an existing index file wins over rebuilding.
    pub fn load(
        entry: &ModelEntry,
        catalog: &Corpus,
        base: &BaseEmbeddings,
        default_seed: u64,
        use_index_files: bool,
    ) -> Result<Self, CliError> {
        let index_file = entry.index.as_ref().filter(|p| use_index_files && p.exists());
        Ok(match entry.kind {
            ModelKind::Wlite => {
                let path = entry.checkpoint.as_ref().expect("resolved at config load");
                if !path.exists() {
                    return Err(CliError::usage(format!(
                        "model {}: checkpoint {} not found; run `reqrank train` first",
                        entry.tag,
                        path.display()
                    )));
                }
                let model = TwoTower::load(path)?;
                let index = match index_file {
                    Some(p) => DenseIndex::load(p)?,
                    None => DenseIndex::build(catalog.items().map(|i| i.id.as_str()), model.item_tower(), base)?,
                };
                Self::Wlite { model, index }
            }
            ModelKind::Bm25 => match index_file {
                Some(p) => Self::Bm25(Bm25Index::load(p)?),
                None => Self::Bm25(build_bm25(entry, catalog)?),
            },
            ModelKind::Random => Self::Random {
                seed: entry.seed.unwrap_or(default_seed),
            },
        })
    }

    /// Ranks `pool`, or the whole catalog when `pool` is `None`.
    pub fn rank(
        &self,
        req: &RequestView,
        pool: Option<&[&str]>,
        catalog: &[&str],
        k: Option<usize>,
    ) -> Result<RankedList, RankError> {
        match self {
            Self::Wlite { model, index } => {
                let base = req.base.expect("WLITE scoring needs a base embedding");
                let u = model.project_request(base)?;
                index.rank_pool(req.id, &u, pool.unwrap_or(catalog), k)
            }
            Self::Bm25(ix) => ix.rank_pool(req.id, req.tokens, pool.unwrap_or(catalog), k),
            Self::Random { seed } => random_rank(req.id, pool.unwrap_or(catalog), k, *seed),
        }
    }
}

pub fn build_bm25(entry: &ModelEntry, catalog: &Corpus) -> Result<Bm25Index, CliError> {
    Ok(Bm25Index::build(
        catalog.items().map(|i| (i.id.as_str(), i.tokens.as_slice())),
        entry.bm25,
    )?)
}

pub struct LoadedModel {
    pub tag: String,
    pub kind: ModelKind,
    pub default: bool,
    pub scorer: Scorer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub tag: String,
    pub kind: ModelKind,
    pub default: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEcho {
    pub text: String,
    pub k: usize,
    pub tokens: Vec<String>,
    pub categories: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEntry {
    pub item_id: String,
    pub item_text: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub request: QueryEcho,
    pub model_tag: String,
    pub entries: Vec<QueryEntry>,
    pub latency_ms: f64,
    /// The model was trained on precomputed embeddings, but free text was
    /// embedded with the hash embedder.
    pub embedding_fallback: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum QueryError {
    #[error("{0}")]
    BadRequest(String),
    #[error("unknown model tag {0:?}")]
    UnknownModel(String),
    #[error("{0}")]
    Internal(String),
}

/// An immutable snapshot of every servable model over one catalog.
pub struct Roster {
    pub version: u64,
    models: Vec<LoadedModel>,
    catalog: IndexMap<String, ItemDescription>,
    lexicon: CategoryLexicon,
    embedder: HashEmbedder,
    file_backed: bool,
}

impl Roster {
    pub fn load(cfg: &PipelineConfig, version: u64) -> Result<Self, CliError> {
        let corpus = data::load_ingested(cfg, None)?;
        let base = data::base_embeddings(cfg, &corpus)?;
        let models = cfg
            .models
            .iter()
            .map(|m| {
                Ok(LoadedModel {
                    tag: m.tag.clone(),
                    kind: m.kind,
                    default: m.default,
                    scorer: Scorer::load(m, &corpus, &base, cfg.eval.seed, true)?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(Self {
            version,
            models,
            catalog: corpus.items().map(|i| (i.id.clone(), i.clone())).collect(),
            lexicon: data::lexicon(cfg)?,
            embedder: data::hash_embedder(cfg, base.dim())?,
            file_backed: data::file_backed(cfg),
        })
    }

    pub fn models(&self) -> Vec<ModelInfo> {
        self.models
            .iter()
            .map(|m| ModelInfo {
                tag: m.tag.clone(),
                kind: m.kind,
                default: m.default,
            })
            .collect()
    }

    pub fn has_model(&self, tag: &str) -> bool {
        self.models.iter().any(|m| m.tag == tag)
    }

    pub fn catalog_len(&self) -> usize {
        self.catalog.len()
    }

    pub fn query(&self, text: &str, k: usize, tag: Option<&str>) -> Result<QueryResponse, QueryError> {
        let start = Instant::now();
        if k == 0 {
            return Err(QueryError::BadRequest("k must be at least 1".into()));
        }
        let model = match tag {
            Some(t) => self
                .models
                .iter()
                .find(|m| m.tag == t)
                .ok_or_else(|| QueryError::UnknownModel(t.into()))?,
            None => self.models.iter().find(|m| m.default).expect("roster has a default"),
        };
        // identical text maps to the same id, so random rankings repeat too
        let id = format!("query-{:016x}", fnv1a(text.as_bytes()));
        let request = tag_categories(TextRequest::new(id, text), &self.lexicon);
        if request.tokens.is_empty() {
            return Err(QueryError::BadRequest("text has no tokens".into()));
        }
        let base =
            matches!(model.scorer, Scorer::Wlite { .. }).then(|| self.embedder.embed(&request.embedding_tokens()));
        let catalog: Vec<&str> = self.catalog.keys().map(String::as_str).collect();
        let view = RequestView {
            id: &request.id,
            tokens: &request.tokens,
            base: base.as_deref(),
        };
        let ranked = model
            .scorer
            .rank(&view, None, &catalog, Some(k))
            .map_err(|e| QueryError::Internal(e.to_string()))?;
        let entries = ranked
            .entries
            .into_iter()
            .map(|e| QueryEntry {
                item_text: self.catalog[&e.item_id].raw.clone(),
                item_id: e.item_id,
                score: e.score,
            })
            .collect();
        Ok(QueryResponse {
            request: QueryEcho {
                text: text.to_string(),
                k,
                tokens: request.tokens.clone(),
                categories: request.categories.iter().cloned().collect(),
            },
            model_tag: model.tag.clone(),
            entries,
            latency_ms: start.elapsed().as_secs_f64() * 1e3,
            embedding_fallback: self.file_backed && base.is_some(),
        })
    }
}
