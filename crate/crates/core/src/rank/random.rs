use rand::seq::SliceRandom;

use super::{RankError, RankedList};
use crate::hashing::keyed_rng;

/// Uniform random permutation of `items`, fixed by `(seed, request_id)` and
/// independent of the order `items` arrive in. Position `p` of `n` gets score
/// `(n - p) / n` so the list obeys the usual ordering rule.
pub fn random_rank(request_id: &str, items: &[&str], k: Option<usize>, seed: u64) -> Result<RankedList, RankError> {
    if k == Some(0) {
        return Err(RankError::ZeroK);
    }
    let mut ids: Vec<&str> = items.to_vec();
    ids.sort_unstable();
    ids.dedup();
    ids.shuffle(&mut keyed_rng(seed, &format!("random-rank/{request_id}")));
    let n = ids.len() as f64;
    let scores = ids
        .iter()
        .enumerate()
        .map(|(p, id)| (id.to_string(), (n - p as f64) / n));
    RankedList::from_scores(request_id, scores, k)
}
