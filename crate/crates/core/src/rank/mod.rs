//! Scorers that turn a request into an ordered list of items: dense dot
//! product over tower projections, Okapi BM25 and a seeded random baseline.
//!
//! Every producer emits a [`RankedList`]: descending score, ties broken by
//! ascending item id.

mod bm25;
mod dense;
mod random;

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::EmbedError;
use crate::towers::TowerError;

pub use bm25::{Bm25Index, Bm25Params, BM25_MAGIC, BM25_VERSION};
pub use dense::DenseIndex;
pub use random::random_rank;

#[derive(Debug, Error)]
pub enum RankError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("cannot build an index over zero items")]
    EmptyIndex,
    #[error("invalid BM25 parameters k1={k1}, b={b}")]
    BadParams { k1: f64, b: f64 },
    #[error("unknown item {0:?}")]
    UnknownItem(String),
    #[error("request vector has length {got}, index dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite projection for item {0:?}")]
    NonFinite(String),
    #[error("BM25 file: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Embedding(#[from] EmbedError),
    #[error(transparent)]
    Tower(#[from] TowerError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub item_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub request_id: String,
    pub entries: Vec<ScoredItem>,
    /// `k` asked for more items than the candidate set holds.
    pub short: bool,
}

fn order(a: &ScoredItem, b: &ScoredItem) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.item_id.cmp(&b.item_id))
}

impl RankedList {
    /// Sorts by the ordering rule and keeps the top `k` (all when `None`).
    /// A repeated item id keeps only its best-placed occurrence.
    pub fn from_scores(
        request_id: impl Into<String>,
        scores: impl IntoIterator<Item = (String, f64)>,
        k: Option<usize>,
    ) -> Result<Self, RankError> {
        if k == Some(0) {
            return Err(RankError::ZeroK);
        }
        let mut entries: Vec<ScoredItem> = scores
            .into_iter()
            .map(|(item_id, score)| ScoredItem { item_id, score })
            .collect();
        entries.sort_by(order);
        let mut seen = HashSet::new();
        entries.retain(|e| seen.insert(e.item_id.clone()));
        let short = k.is_some_and(|k| k > entries.len());
        if let Some(k) = k {
            entries.truncate(k);
        }
        Ok(Self {
            request_id: request_id.into(),
            entries,
            short,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn item_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.item_id.as_str())
    }

    /// Non-increasing scores, unique ids, ties in ascending id order.
    pub fn is_well_ordered(&self) -> bool {
        let unique = self.item_ids().collect::<HashSet<_>>().len() == self.entries.len();
        unique && self.entries.windows(2).all(|w| order(&w[0], &w[1]) == Ordering::Less)
    }
}
