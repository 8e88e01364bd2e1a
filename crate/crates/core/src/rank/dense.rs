use std::path::Path;

use indexmap::IndexMap;

use super::{RankError, RankedList};
use crate::embed::{BaseEmbeddings, EmbeddingStore, Provenance};
use crate::towers::Tower;

/// Item-tower projections of a catalog, keyed by item id.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseIndex {
    dim: usize,
    rows: IndexMap<String, Vec<f32>>,
}

fn dot(u: &[f32], v: &[f32]) -> f64 {
    u.iter().zip(v).map(|(&a, &b)| a as f64 * b as f64).sum()
}

impl DenseIndex {
    pub fn build<'a>(
        item_ids: impl IntoIterator<Item = &'a str>,
        item_tower: &Tower<f32>,
        base: &BaseEmbeddings,
    ) -> Result<Self, RankError> {
        let mut rows = IndexMap::new();
        for id in item_ids {
            if rows.contains_key(id) {
                continue;
            }
            let row = item_tower.forward(base.item(id)?)?;
            if row.iter().any(|v| !v.is_finite()) {
                return Err(RankError::NonFinite(id.to_string()));
            }
            rows.insert(id.to_string(), row);
        }
        if rows.is_empty() {
            return Err(RankError::EmptyIndex);
        }
        Ok(Self {
            dim: item_tower.out_dim(),
            rows,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, id: &str) -> Option<&[f32]> {
        self.rows.get(id).map(Vec::as_slice)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    fn check(&self, request: &[f32]) -> Result<(), RankError> {
        if request.len() != self.dim {
            return Err(RankError::DimensionMismatch {
                expected: self.dim,
                got: request.len(),
            });
        }
        Ok(())
    }

    /// Top `k` of the whole index by dot product with a projected request.
    pub fn topk(&self, request_id: &str, request: &[f32], k: usize) -> Result<RankedList, RankError> {
        self.check(request)?;
        let scores = self.rows.iter().map(|(id, row)| (id.clone(), dot(request, row)));
        RankedList::from_scores(request_id, scores, Some(k))
    }

    /// Ranks a candidate pool; every candidate must be indexed.
    pub fn rank_pool(
        &self,
        request_id: &str,
        request: &[f32],
        pool: &[&str],
        k: Option<usize>,
    ) -> Result<RankedList, RankError> {
        self.check(request)?;
        let mut scores = Vec::with_capacity(pool.len());
        for &id in pool {
            let row = self.row(id).ok_or_else(|| RankError::UnknownItem(id.to_string()))?;
            scores.push((id.to_string(), dot(request, row)));
        }
        RankedList::from_scores(request_id, scores, k)
    }

    pub fn to_store(&self) -> EmbeddingStore {
        let mut store = EmbeddingStore::new(self.dim, Provenance::File);
        for (id, row) in &self.rows {
            store
                .insert(id.clone(), row.clone())
                .expect("index rows are validated at build");
        }
        store
    }

    /// Rows are taken as stored: projections are not normalized.
    pub fn from_store(store: &EmbeddingStore) -> Result<Self, RankError> {
        if store.is_empty() {
            return Err(RankError::EmptyIndex);
        }
        let rows = store.iter().map(|(id, v)| (id.to_string(), v.to_vec())).collect();
        Ok(Self { dim: store.dim(), rows })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RankError> {
        Ok(self.to_store().save(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RankError> {
        Self::from_store(&EmbeddingStore::load(path)?)
    }
}
