//! Frozen base embeddings.
//!
//! The towers never see raw text: every request and item is first mapped to a
//! fixed-dimension vector by a backbone that is not trained here. Vectors come
//! either from precomputed `EMB1` files or from the signed feature-hashing
//! embedder, which needs no model at all.

mod format;
mod hash;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;

pub use format::{EMBEDDING_MAGIC, EMBEDDING_VERSION};
pub use hash::{hash_embed, HashEmbedder, DEFAULT_HASH_DIM, DEFAULT_HASH_SEED};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not an embedding file (bad magic)")]
    BadMagic,
    #[error("unsupported embedding file version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated embedding file: {0}")]
    Truncated(String),
    #[error("{0} trailing bytes after the last record")]
    TrailingBytes(usize),
    #[error("duplicate embedding id `{0}`")]
    DuplicateId(String),
    #[error("embedding `{0}` contains a non-finite value")]
    NonFinite(String),
    #[error("embedding `{id}` has length {got}, store dimension is {expected}")]
    DimensionMismatch { id: String, expected: usize, got: usize },
    #[error("embedding id `{0}` is not valid UTF-8")]
    BadId(String),
    #[error("embedding id longer than 65535 bytes")]
    IdTooLong,
    #[error("hash embedding dimension must be at least 8, got {0}")]
    DimensionTooSmall(usize),
    #[error("no embedding for {kind} `{id}`")]
    Missing { kind: &'static str, id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Provenance {
    File,
    Hash,
}

/// Fixed-dimension `f32` vectors keyed by text id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    entries: IndexMap<String, Vec<f32>>,
    provenance: Provenance,
}

impl EmbeddingStore {
    pub fn new(dim: usize, provenance: Provenance) -> Self {
        Self {
            dim,
            entries: IndexMap::new(),
            provenance,
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f32>) -> Result<(), EmbedError> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(EmbedError::DimensionMismatch {
                id,
                expected: self.dim,
                got: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite(id));
        }
        if id.len() > u16::MAX as usize {
            return Err(EmbedError::IdTooLong);
        }
        if self.entries.contains_key(&id) {
            return Err(EmbedError::DuplicateId(id));
        }
        self.entries.insert(id, vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.entries.get(id).map(Vec::as_slice)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Copy with every vector scaled to unit length (zero vectors stay zero).
    pub fn normalized(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|(k, v)| (k.clone(), l2_normalize(v))).collect(),
            provenance: self.provenance,
        }
    }
}

/// Scales `v` to unit Euclidean norm; the zero vector maps to itself.
pub fn l2_normalize(v: &[f32]) -> Vec<f32> {
    let norm = v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt();
    if norm == 0.0 {
        return v.to_vec();
    }
    v.iter().map(|&x| (f64::from(x) / norm) as f32).collect()
}

/// Unit-normalized base vectors for the requests and items of a corpus.
///
/// Ids of the two sides live in separate namespaces.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseEmbeddings {
    pub requests: EmbeddingStore,
    pub items: EmbeddingStore,
}

impl BaseEmbeddings {
    /// Hash-embeds every request (tokens plus category markers) and item.
    pub fn hashed(corpus: &Corpus, embedder: &HashEmbedder) -> Self {
        let mut requests = EmbeddingStore::new(embedder.dim(), Provenance::Hash);
        for r in corpus.requests() {
            requests
                .insert(r.id.clone(), embedder.embed(&r.embedding_tokens()))
                .expect("corpus ids are unique");
        }
        let mut items = EmbeddingStore::new(embedder.dim(), Provenance::Hash);
        for i in corpus.items() {
            items
                .insert(i.id.clone(), embedder.embed(&i.tokens))
                .expect("corpus ids are unique");
        }
        Self { requests, items }
    }

    /// Wraps precomputed stores, normalizing their vectors.
    pub fn from_stores(requests: &EmbeddingStore, items: &EmbeddingStore) -> Result<Self, EmbedError> {
        if requests.dim() != items.dim() {
            return Err(EmbedError::DimensionMismatch {
                id: "<item store>".into(),
                expected: requests.dim(),
                got: items.dim(),
            });
        }
        Ok(Self {
            requests: requests.normalized(),
            items: items.normalized(),
        })
    }

    pub fn dim(&self) -> usize {
        self.requests.dim()
    }

    pub fn request(&self, id: &str) -> Result<&[f32], EmbedError> {
        self.requests.get(id).ok_or_else(|| EmbedError::Missing {
            kind: "request",
            id: id.to_string(),
        })
    }

    pub fn item(&self, id: &str) -> Result<&[f32], EmbedError> {
        self.items.get(id).ok_or_else(|| EmbedError::Missing {
            kind: "item",
            id: id.to_string(),
        })
    }

    /// Fails on the first request or item of `corpus` without a vector.
    pub fn check_covers(&self, corpus: &Corpus) -> Result<(), EmbedError> {
        for p in corpus.pairs() {
            self.request(&p.request_id)?;
            self.item(&p.item_id)?;
        }
        Ok(())
    }
}
