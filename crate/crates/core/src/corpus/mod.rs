//! Requests, items and labeled pairs: the data model plus ingestion,
//! review adaptation, category tagging, negative sampling and splitting.

mod adapt;
mod io;
mod lexicon;
mod negatives;
mod split;
pub mod synthetic;
mod tokenize;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adapt::{adapt_reviews, AdaptReport, ReviewRecord};
pub use io::{load_corpus, read_jsonl, write_jsonl, LoadReport, RawInteraction, RawText};
pub use lexicon::{tag_categories, CategoryLexicon, CATEGORY_MARKER};
pub use negatives::{sample_negatives, NegativeReport};
pub use split::{split, SplitSpec, Splits};
pub use tokenize::tokenize;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed { path: String, line: usize, message: String },
    #[error("{path}:{line}: interaction references unknown {kind} id `{id}`")]
    DanglingReference {
        path: String,
        line: usize,
        kind: &'static str,
        id: String,
    },
    #[error("duplicate {kind} id `{id}` with differing text")]
    ConflictingDuplicate { kind: &'static str, id: String },
    #[error("invalid lexicon: {0}")]
    Lexicon(String),
    #[error("invalid split spec: {0}")]
    InvalidSplit(String),
    #[error("cannot split {requests} requests into {splits} non-empty splits")]
    TooFewRequests { requests: usize, splits: usize },
    #[error("negative ratio must be positive and finite, got {0}")]
    InvalidRatio(f64),
    #[error("negative sampling needs at least 2 items, corpus has {0}")]
    TooFewItems(usize),
}

/// Interaction class of a (request, item) pair.
///
/// Every stylist-chosen item is a positive whatever the user did with it;
/// only sampled negatives carry `Neg`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Interaction {
    #[serde(rename = "TRY")]
    Try,
    #[serde(rename = "KEEP")]
    Keep,
    #[serde(rename = "NOTTRY")]
    NotTry,
    #[serde(rename = "NEG")]
    Neg,
}

impl Interaction {
    pub fn label(self) -> Label {
        match self {
            Interaction::Try | Interaction::Keep | Interaction::NotTry => Label::Positive,
            Interaction::Neg => Label::Negative,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Interaction::Try => "TRY",
            Interaction::Keep => "KEEP",
            Interaction::NotTry => "NOTTRY",
            Interaction::Neg => "NEG",
        }
    }
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Binary pair label, `+1` / `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn sign(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    /// The `{1, 0}` target used by binary cross entropy.
    pub fn target(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => 0.0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextRequest {
    pub id: String,
    pub raw: String,
    pub tokens: Vec<String>,
    pub categories: BTreeSet<String>,
}

impl TextRequest {
    pub fn new(id: impl Into<String>, raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let tokens = tokenize(&raw);
        Self {
            id: id.into(),
            raw,
            tokens,
            categories: BTreeSet::new(),
        }
    }

    /// Tokens fed to a token-level embedder: the text tokens followed by one
    /// marker token per tagged category.
    pub fn embedding_tokens(&self) -> Vec<String> {
        let mut out = self.tokens.clone();
        out.extend(self.categories.iter().map(|c| format!("{CATEGORY_MARKER}{c}")));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemDescription {
    pub id: String,
    pub raw: String,
    pub tokens: Vec<String>,
}

impl ItemDescription {
    pub fn new(id: impl Into<String>, raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let tokens = tokenize(&raw);
        Self {
            id: id.into(),
            raw,
            tokens,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledPair {
    pub request_id: String,
    pub item_id: String,
    pub interaction: Interaction,
}

impl LabeledPair {
    pub fn new(request_id: impl Into<String>, item_id: impl Into<String>, interaction: Interaction) -> Self {
        Self {
            request_id: request_id.into(),
            item_id: item_id.into(),
            interaction,
        }
    }

    pub fn label(&self) -> Label {
        self.interaction.label()
    }
}

/// An immutable, referentially consistent set of requests, items and pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    requests: IndexMap<String, TextRequest>,
    items: IndexMap<String, ItemDescription>,
    pairs: Vec<LabeledPair>,
}

impl Corpus {
    /// Builds a corpus, checking every pair against the request and item maps.
    ///
    /// Pairs repeating an already seen (request, item) combination are
    /// dropped; the first occurrence wins.
    pub fn new(
        requests: impl IntoIterator<Item = TextRequest>,
        items: impl IntoIterator<Item = ItemDescription>,
        pairs: impl IntoIterator<Item = LabeledPair>,
    ) -> Result<Self, CorpusError> {
        let mut corpus = Corpus::default();
        for r in requests {
            corpus.insert_request(r)?;
        }
        for i in items {
            corpus.insert_item(i)?;
        }
        let mut seen = HashSet::new();
        for (n, p) in pairs.into_iter().enumerate() {
            corpus.check_pair(&p, "<memory>", n + 1)?;
            if seen.insert((p.request_id.clone(), p.item_id.clone())) {
                corpus.pairs.push(p);
            }
        }
        Ok(corpus)
    }

    /// Returns `true` when the request was new, `false` for an identical duplicate.
    pub(crate) fn insert_request(&mut self, r: TextRequest) -> Result<bool, CorpusError> {
        match self.requests.get(&r.id) {
            Some(existing) if existing.raw == r.raw => Ok(false),
            Some(_) => Err(CorpusError::ConflictingDuplicate {
                kind: "request",
                id: r.id,
            }),
            None => {
                self.requests.insert(r.id.clone(), r);
                Ok(true)
            }
        }
    }

    pub(crate) fn insert_item(&mut self, i: ItemDescription) -> Result<bool, CorpusError> {
        match self.items.get(&i.id) {
            Some(existing) if existing.raw == i.raw => Ok(false),
            Some(_) => Err(CorpusError::ConflictingDuplicate { kind: "item", id: i.id }),
            None => {
                self.items.insert(i.id.clone(), i);
                Ok(true)
            }
        }
    }

    pub(crate) fn check_pair(&self, p: &LabeledPair, path: &str, line: usize) -> Result<(), CorpusError> {
        if !self.requests.contains_key(&p.request_id) {
            return Err(CorpusError::DanglingReference {
                path: path.to_string(),
                line,
                kind: "request",
                id: p.request_id.clone(),
            });
        }
        if !self.items.contains_key(&p.item_id) {
            return Err(CorpusError::DanglingReference {
                path: path.to_string(),
                line,
                kind: "item",
                id: p.item_id.clone(),
            });
        }
        Ok(())
    }

    pub fn requests(&self) -> impl ExactSizeIterator<Item = &TextRequest> {
        self.requests.values()
    }

    pub fn items(&self) -> impl ExactSizeIterator<Item = &ItemDescription> {
        self.items.values()
    }

    pub fn pairs(&self) -> &[LabeledPair] {
        &self.pairs
    }

    pub fn request(&self, id: &str) -> Option<&TextRequest> {
        self.requests.get(id)
    }

    pub fn item(&self, id: &str) -> Option<&ItemDescription> {
        self.items.get(id)
    }

    pub fn request_count(&self) -> usize {
        self.requests.len()
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    /// Pairs grouped by request, in first-seen order.
    pub fn pairs_by_request(&self) -> IndexMap<&str, Vec<&LabeledPair>> {
        let mut out: IndexMap<&str, Vec<&LabeledPair>> = IndexMap::new();
        for p in &self.pairs {
            out.entry(p.request_id.as_str()).or_default().push(p);
        }
        out
    }

    /// Positive item ids per request.
    pub fn positives(&self) -> HashMap<&str, BTreeSet<&str>> {
        let mut out: HashMap<&str, BTreeSet<&str>> = HashMap::new();
        for p in self.pairs.iter().filter(|p| p.label().is_positive()) {
            out.entry(p.request_id.as_str()).or_default().insert(p.item_id.as_str());
        }
        out
    }

    /// Applies `f` to every request (e.g. category tagging).
    pub fn map_requests(mut self, mut f: impl FnMut(TextRequest) -> TextRequest) -> Self {
        self.requests = self.requests.into_iter().map(|(id, r)| (id, f(r))).collect();
        self
    }

    /// Same requests and items with a different pair list; the caller
    /// guarantees the pairs reference existing ids.
    pub(crate) fn with_pairs(&self, pairs: Vec<LabeledPair>) -> Self {
        Self {
            requests: self.requests.clone(),
            items: self.items.clone(),
            pairs,
        }
    }

    /// Restricts requests (and their pairs) to `keep`; items are shared.
    pub(crate) fn restrict_requests(&self, keep: &HashSet<&str>) -> Self {
        Self {
            requests: self
                .requests
                .iter()
                .filter(|(id, _)| keep.contains(id.as_str()))
                .map(|(id, r)| (id.clone(), r.clone()))
                .collect(),
            items: self.items.clone(),
            pairs: self
                .pairs
                .iter()
                .filter(|p| keep.contains(p.request_id.as_str()))
                .cloned()
                .collect(),
        }
    }
}
