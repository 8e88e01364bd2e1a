use std::collections::BTreeSet;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::hashing::keyed_rng;

/// Which items a request is ranked against during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase")]
pub enum PoolPolicy {
    /// The request's own labeled pairs: positives plus their sampled negatives.
    #[default]
    Labeled,
    /// Every positive, topped up to `size` with random catalog items that are
    /// not positives of the request.
    Sampled { size: usize },
    /// The whole catalog.
    Catalog,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub request_id: String,
    pub items: Vec<String>,
}

/// One pool per request that has pairs, in the corpus' pair order. Sampled
/// pools depend only on `(seed, request id)` and the catalog contents.
pub fn build_pools(corpus: &Corpus, policy: PoolPolicy, seed: u64) -> Vec<CandidatePool> {
    let positives = corpus.positives();
    let mut catalog: Vec<&str> = corpus.items().map(|i| i.id.as_str()).collect();
    catalog.sort_unstable();
    corpus
        .pairs_by_request()
        .into_iter()
        .map(|(request, pairs)| {
            let items = match policy {
                PoolPolicy::Labeled => pairs.iter().map(|p| p.item_id.clone()).collect(),
                PoolPolicy::Catalog => catalog.iter().map(|s| s.to_string()).collect(),
                PoolPolicy::Sampled { size } => {
                    let pos: BTreeSet<&str> = positives.get(request).cloned().unwrap_or_default();
                    let rest: Vec<&str> = catalog.iter().copied().filter(|i| !pos.contains(i)).collect();
                    let want = size.saturating_sub(pos.len()).min(rest.len());
                    let mut rng = keyed_rng(seed, &format!("pool/{request}"));
                    let mut picked: Vec<usize> = sample(&mut rng, rest.len(), want).into_vec();
                    picked.sort_unstable();
                    pos.iter()
                        .map(|s| s.to_string())
                        .chain(picked.into_iter().map(|i| rest[i].to_string()))
                        .collect()
                }
            };
            CandidatePool {
                request_id: request.to_string(),
                items,
            }
        })
        .collect()
}
