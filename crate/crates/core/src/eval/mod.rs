//! Retrieval metrics over ranked lists, run-level reports and Likert
//! feedback aggregation.
//!
//! Relevance is binary. Precision@k always divides by `k`, so a pool smaller
//! than `k` counts its empty slots as misses. NDCG uses linear gain with a
//! `log2(i + 1)` discount over the whole returned list.

mod likert;
mod pools;
mod report;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{read_jsonl, write_jsonl, Corpus, CorpusError};
use crate::rank::RankedList;

pub use likert::{aggregate_likert, likert_value, LikertSummary};
pub use pools::{build_pools, CandidatePool, PoolPolicy};
pub use report::{evaluate_run, render_table, Averaging, EvalReport, MetricsAtK, RequestMetrics};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("the k set is empty")]
    EmptyKSet,
    #[error("no judgment for request {0:?}")]
    UnmatchedRequest(String),
    #[error("request {0:?} is ranked twice")]
    DuplicateRanking(String),
    #[error("request {0:?} has two judgments")]
    DuplicateJudgment(String),
    #[error("no request has a nonempty relevant set")]
    NothingToAverage,
    #[error("likert rating {0} is outside 1..=5")]
    RatingOutOfRange(i64),
    #[error("cannot aggregate an empty batch of ratings")]
    EmptyBatch,
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceJudgment {
    pub request_id: String,
    pub relevant: BTreeSet<String>,
}

impl RelevanceJudgment {
    pub fn new<S: Into<String>>(request_id: impl Into<String>, relevant: impl IntoIterator<Item = S>) -> Self {
        Self {
            request_id: request_id.into(),
            relevant: relevant.into_iter().map(Into::into).collect(),
        }
    }

    /// One judgment per request holding its positively labeled items. Requests
    /// with negatives only get an empty set.
    pub fn from_corpus(corpus: &Corpus) -> Vec<Self> {
        let positives = corpus.positives();
        corpus
            .requests()
            .map(|r| {
                Self::new(
                    r.id.clone(),
                    positives.get(r.id.as_str()).into_iter().flatten().copied(),
                )
            })
            .collect()
    }

    pub fn is_relevant(&self, item: &str) -> bool {
        self.relevant.contains(item)
    }
}

/// Reads `{"request_id": .., "relevant": [..]}` lines.
pub fn load_judgments(path: &Path) -> Result<Vec<RelevanceJudgment>, EvalError> {
    Ok(read_jsonl(path)?.into_iter().map(|(_, j)| j).collect())
}

pub fn write_judgments(path: &Path, judgments: &[RelevanceJudgment]) -> Result<(), EvalError> {
    Ok(write_jsonl(path, judgments)?)
}

fn hits(ranked: &RankedList, judgment: &RelevanceJudgment, k: usize) -> usize {
    ranked.item_ids().take(k).filter(|i| judgment.is_relevant(i)).count()
}

pub fn precision_at_k(ranked: &RankedList, judgment: &RelevanceJudgment, k: usize) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::ZeroK);
    }
    Ok(hits(ranked, judgment, k) as f64 / k as f64)
}

/// `None` when the relevant set is empty.
pub fn recall_at_k(ranked: &RankedList, judgment: &RelevanceJudgment, k: usize) -> Result<Option<f64>, EvalError> {
    if k == 0 {
        return Err(EvalError::ZeroK);
    }
    if judgment.relevant.is_empty() {
        return Ok(None);
    }
    Ok(Some(hits(ranked, judgment, k) as f64 / judgment.relevant.len() as f64))
}

fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

/// `None` when the relevant set is empty. The ideal list has the same length
/// as the returned one, so its gain covers `min(|relevant|, n)` positions.
pub fn ndcg(ranked: &RankedList, judgment: &RelevanceJudgment) -> Option<f64> {
    if judgment.relevant.is_empty() {
        return None;
    }
    let dcg: f64 = ranked
        .item_ids()
        .enumerate()
        .filter(|(_, id)| judgment.is_relevant(id))
        .map(|(i, _)| discount(i + 1))
        .sum();
    let ideal = judgment.relevant.len().min(ranked.len());
    let idcg: f64 = (1..=ideal).map(discount).sum();
    Some(if idcg > 0.0 { dcg / idcg } else { 0.0 })
}
