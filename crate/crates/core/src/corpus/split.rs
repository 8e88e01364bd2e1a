use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError};
use crate::hashing::seeded_hash;

/// Train/dev/test fractions plus the seed of the request-id hash.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 0.8,
            dev: 0.1,
            test: 0.1,
            seed: 42,
        }
    }
}

impl SplitSpec {
    pub fn new(train: f64, dev: f64, test: f64, seed: u64) -> Result<Self, CorpusError> {
        let spec = Self { train, dev, test, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let f = self.fractions();
        if f.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(CorpusError::InvalidSplit(format!(
                "fractions must be nonnegative, got {f:?}"
            )));
        }
        let sum: f64 = f.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CorpusError::InvalidSplit(format!("fractions sum to {sum}, not 1")));
        }
        Ok(())
    }

    pub fn fractions(&self) -> [f64; 3] {
        [self.train, self.dev, self.test]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Corpus,
    pub dev: Corpus,
    pub test: Corpus,
}

/// Split sizes by largest remainder, then every split with a positive
/// fraction is given at least one request (taken from the largest split).
fn allocate(n: usize, fractions: [f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut sizes = [0usize; 3];
    for (s, e) in sizes.iter_mut().zip(&exact) {
        *s = e.floor() as usize;
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let assigned: usize = sizes.iter().sum();
    for &i in order.iter().cycle().take(n - assigned) {
        sizes[i] += 1;
    }
    for i in 0..3 {
        if fractions[i] > 0.0 && sizes[i] == 0 {
            let donor = (0..3).max_by_key(|&j| (sizes[j], std::cmp::Reverse(j))).unwrap();
            sizes[donor] -= 1;
            sizes[i] += 1;
        }
    }
    sizes
}

/// Partitions the corpus by request: requests are ordered by a seeded hash
/// of their id and cut into contiguous train/dev/test runs, so all pairs of a
/// request land in the same split. Items are shared by every split.
pub fn split(corpus: &Corpus, spec: &SplitSpec) -> Result<Splits, CorpusError> {
    spec.validate()?;
    let fractions = spec.fractions();
    let wanted = fractions.iter().filter(|f| **f > 0.0).count();
    let n = corpus.request_count();
    if n < wanted {
        return Err(CorpusError::TooFewRequests {
            requests: n,
            splits: wanted,
        });
    }

    let mut ids: Vec<(u64, &str)> = corpus
        .requests()
        .map(|r| (seeded_hash(spec.seed, &r.id), r.id.as_str()))
        .collect();
    ids.sort_unstable();

    let [n_train, n_dev, _] = allocate(n, fractions);
    let part = |range: std::ops::Range<usize>| -> HashSet<&str> { ids[range].iter().map(|(_, id)| *id).collect() };
    let train = part(0..n_train);
    let dev = part(n_train..n_train + n_dev);
    let test = part(n_train + n_dev..n);

    Ok(Splits {
        train: corpus.restrict_requests(&train),
        dev: corpus.restrict_requests(&dev),
        test: corpus.restrict_requests(&test),
    })
}
