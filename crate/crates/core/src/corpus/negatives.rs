use std::collections::HashSet;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, Interaction, LabeledPair};
use crate::hashing::keyed_rng;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegativeReport {
    pub added: usize,
    /// Requests whose positives cover the whole catalog.
    pub saturated_requests: usize,
    /// Requests that received fewer negatives than requested.
    pub short_requests: usize,
}

/// Adds `ceil(ratio * positives)` sampled negatives per request.
///
/// Negatives are drawn uniformly without replacement from the items that are
/// neither positive nor already negative for the request. The draw for each
/// request depends only on `(seed, request id)`.
pub fn sample_negatives(corpus: &Corpus, ratio: f64, seed: u64) -> Result<(Corpus, NegativeReport), CorpusError> {
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(CorpusError::InvalidRatio(ratio));
    }
    if corpus.item_count() < 2 {
        return Err(CorpusError::TooFewItems(corpus.item_count()));
    }

    let mut report = NegativeReport::default();
    let mut pairs = corpus.pairs().to_vec();
    let item_ids: Vec<&str> = corpus.items().map(|i| i.id.as_str()).collect();

    for (request_id, own) in corpus.pairs_by_request() {
        let positives = own.iter().filter(|p| p.label().is_positive()).count();
        if positives == 0 {
            continue;
        }
        let wanted = (ratio * positives as f64).ceil() as usize;
        let taken: HashSet<&str> = own.iter().map(|p| p.item_id.as_str()).collect();
        let eligible: Vec<&str> = item_ids.iter().copied().filter(|i| !taken.contains(i)).collect();
        if eligible.is_empty() {
            report.saturated_requests += 1;
            continue;
        }
        let n = wanted.min(eligible.len());
        if n < wanted {
            report.short_requests += 1;
        }
        let mut rng = keyed_rng(seed, request_id);
        let mut picked: Vec<usize> = sample(&mut rng, eligible.len(), n).into_vec();
        picked.sort_unstable();
        for idx in picked {
            pairs.push(LabeledPair::new(request_id, eligible[idx], Interaction::Neg));
        }
        report.added += n;
    }

    Ok((corpus.with_pairs(pairs), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ItemDescription, TextRequest};
    use std::collections::BTreeSet;

    fn corpus(items: usize, positives: &[usize]) -> Corpus {
        Corpus::new(
            [TextRequest::new("r1", "need tops")],
            (0..items).map(|i| ItemDescription::new(format!("i{i:02}"), format!("item {i}"))),
            positives
                .iter()
                .map(|&i| LabeledPair::new("r1", format!("i{i:02}"), Interaction::Try)),
        )
        .unwrap()
    }

    fn negatives(c: &Corpus) -> BTreeSet<String> {
        c.pairs()
            .iter()
            .filter(|p| p.interaction == Interaction::Neg)
            .map(|p| p.item_id.clone())
            .collect()
    }

    #[test]
    fn count_and_disjointness() {
        let (c, rep) = sample_negatives(&corpus(10, &[0, 3]), 1.0, 42).unwrap();
        let neg = negatives(&c);
        assert_eq!(neg.len(), 2);
        assert_eq!(rep.added, 2);
        assert!(!neg.contains("i00") && !neg.contains("i03"));
        assert!(c
            .pairs()
            .iter()
            .filter(|p| p.interaction == Interaction::Neg)
            .all(|p| p.label().sign() == -1));
    }

    #[test]
    fn ratio_rounds_up() {
        let (c, _) = sample_negatives(&corpus(10, &[0, 3, 5]), 0.5, 1).unwrap();
        assert_eq!(negatives(&c).len(), 2);
    }

    #[test]
    fn seed_determinism() {
        let base = corpus(30, &[1, 2, 3]);
        let a = sample_negatives(&base, 2.0, 9).unwrap().0;
        let b = sample_negatives(&base, 2.0, 9).unwrap().0;
        assert_eq!(a, b);
        let other = sample_negatives(&base, 2.0, 10).unwrap().0;
        assert_eq!(negatives(&other).len(), 6);
    }

    #[test]
    fn saturated_request_gets_none() {
        let (c, rep) = sample_negatives(&corpus(3, &[0, 1, 2]), 1.0, 0).unwrap();
        assert!(negatives(&c).is_empty());
        assert_eq!(rep.saturated_requests, 1);
    }

    #[test]
    fn short_pool_counted() {
        let (c, rep) = sample_negatives(&corpus(4, &[0, 1]), 2.0, 0).unwrap();
        assert_eq!(negatives(&c).len(), 2);
        assert_eq!(rep.short_requests, 1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            sample_negatives(&corpus(10, &[0]), 0.0, 0),
            Err(CorpusError::InvalidRatio(_))
        ));
        assert!(matches!(
            sample_negatives(&corpus(1, &[0]), 1.0, 0),
            Err(CorpusError::TooFewItems(1))
        ));
    }

    #[test]
    fn draws_are_uniform() {
        // 10k single draws over 5 eligible items: binomial(10000, 0.2),
        // sd = 40, so 2000 +- 150 is a > 3 sigma band.
        let base = corpus(6, &[0]);
        let mut counts = std::collections::BTreeMap::new();
        for seed in 0..10_000u64 {
            let (c, _) = sample_negatives(&base, 1.0, seed).unwrap();
            for id in negatives(&c) {
                *counts.entry(id).or_insert(0usize) += 1;
            }
        }
        assert_eq!(counts.len(), 5);
        for (id, n) in counts {
            assert!((1850..=2150).contains(&n), "{id}: {n}");
        }
    }
}
