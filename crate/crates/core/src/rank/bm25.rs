use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{RankError, RankedList};

pub const BM25_MAGIC: &[u8; 4] = b"BM25";
pub const BM25_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<(), RankError> {
        let ok = self.k1.is_finite() && self.k1 >= 0.0 && (0.0..=1.0).contains(&self.b);
        if !ok {
            return Err(RankError::BadParams { k1: self.k1, b: self.b });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Doc {
    len: u32,
    tf: BTreeMap<String, u32>,
}

/// Okapi BM25 statistics over tokenized item descriptions.
#[derive(Debug, Clone, PartialEq)]
pub struct Bm25Index {
    params: Bm25Params,
    docs: IndexMap<String, Doc>,
    df: HashMap<String, u32>,
    avg_len: f64,
}

impl Bm25Index {
    /// Repeated ids keep their first document.
    pub fn build<'a, S: AsRef<str> + 'a>(
        docs: impl IntoIterator<Item = (&'a str, &'a [S])>,
        params: Bm25Params,
    ) -> Result<Self, RankError> {
        params.validate()?;
        let mut out = IndexMap::new();
        for (id, tokens) in docs {
            if out.contains_key(id) {
                continue;
            }
            let mut tf = BTreeMap::new();
            for t in tokens {
                *tf.entry(t.as_ref().to_string()).or_insert(0u32) += 1;
            }
            out.insert(
                id.to_string(),
                Doc {
                    len: tokens.len() as u32,
                    tf,
                },
            );
        }
        Self::from_docs(params, out)
    }

    fn from_docs(params: Bm25Params, docs: IndexMap<String, Doc>) -> Result<Self, RankError> {
        if docs.is_empty() {
            return Err(RankError::EmptyIndex);
        }
        let mut df = HashMap::new();
        for d in docs.values() {
            for t in d.tf.keys() {
                *df.entry(t.clone()).or_insert(0) += 1;
            }
        }
        let avg_len = docs.values().map(|d| d.len as f64).sum::<f64>() / docs.len() as f64;
        Ok(Self {
            params,
            docs,
            df,
            avg_len,
        })
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.avg_len
    }

    pub fn df(&self, term: &str) -> u32 {
        self.df.get(term).copied().unwrap_or(0)
    }

    pub fn tf(&self, term: &str, doc: &str) -> u32 {
        self.docs.get(doc).and_then(|d| d.tf.get(term)).copied().unwrap_or(0)
    }

    pub fn doc_len(&self, doc: &str) -> Option<u32> {
        self.docs.get(doc).map(|d| d.len)
    }

    pub fn contains(&self, doc: &str) -> bool {
        self.docs.contains_key(doc)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.docs.keys().map(String::as_str)
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.docs.len() as f64;
        let df = self.df(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn score_doc(&self, terms: &[(&str, f64)], d: &Doc) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let rel_len = if self.avg_len > 0.0 {
            d.len as f64 / self.avg_len
        } else {
            1.0
        };
        let norm = k1 * (1.0 - b + b * rel_len);
        let mut s = 0.0;
        for &(t, idf) in terms {
            if let Some(&tf) = d.tf.get(t) {
                let tf = tf as f64;
                s += idf * tf * (k1 + 1.0) / (tf + norm);
            }
        }
        s
    }

    /// Each distinct query term counts once, in sorted order.
    fn query_terms<'q, S: AsRef<str>>(&self, query: &'q [S]) -> Vec<(&'q str, f64)> {
        let unique: BTreeSet<&str> = query.iter().map(AsRef::as_ref).collect();
        unique.into_iter().map(|t| (t, self.idf(t))).collect()
    }

    pub fn score<S: AsRef<str>>(&self, query: &[S], doc: &str) -> Result<f64, RankError> {
        let d = self
            .docs
            .get(doc)
            .ok_or_else(|| RankError::UnknownItem(doc.to_string()))?;
        Ok(self.score_doc(&self.query_terms(query), d))
    }

    pub fn topk<S: AsRef<str>>(&self, request_id: &str, query: &[S], k: usize) -> Result<RankedList, RankError> {
        let terms = self.query_terms(query);
        let scores = self.docs.iter().map(|(id, d)| (id.clone(), self.score_doc(&terms, d)));
        RankedList::from_scores(request_id, scores, Some(k))
    }

    pub fn rank_pool<S: AsRef<str>>(
        &self,
        request_id: &str,
        query: &[S],
        pool: &[&str],
        k: Option<usize>,
    ) -> Result<RankedList, RankError> {
        let terms = self.query_terms(query);
        let mut scores = Vec::with_capacity(pool.len());
        for &id in pool {
            let d = self
                .docs
                .get(id)
                .ok_or_else(|| RankError::UnknownItem(id.to_string()))?;
            scores.push((id.to_string(), self.score_doc(&terms, d)));
        }
        RankedList::from_scores(request_id, scores, k)
    }

    /// `BM25 | u32 version | f64 k1 | f64 b | u64 docs | per doc: u16 id len,
    /// id, u32 len, u32 terms, per term: u16 len, bytes, u32 tf`, all LE.
    /// Document frequencies and the mean length are rebuilt on load.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(BM25_MAGIC);
        out.extend_from_slice(&BM25_VERSION.to_le_bytes());
        out.extend_from_slice(&self.params.k1.to_le_bytes());
        out.extend_from_slice(&self.params.b.to_le_bytes());
        out.extend_from_slice(&(self.docs.len() as u64).to_le_bytes());
        let put_str = |out: &mut Vec<u8>, s: &str| {
            out.extend_from_slice(&(s.len() as u16).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        };
        for (id, d) in &self.docs {
            put_str(&mut out, id);
            out.extend_from_slice(&d.len.to_le_bytes());
            out.extend_from_slice(&(d.tf.len() as u32).to_le_bytes());
            for (t, tf) in &d.tf {
                put_str(&mut out, t);
                out.extend_from_slice(&tf.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, RankError> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(4)? != BM25_MAGIC {
            return Err(RankError::Format("bad magic".into()));
        }
        let version = r.u32()?;
        if version != BM25_VERSION {
            return Err(RankError::Format(format!("unsupported version {version}")));
        }
        let params = Bm25Params {
            k1: f64::from_le_bytes(r.array()?),
            b: f64::from_le_bytes(r.array()?),
        };
        params.validate()?;
        let n = u64::from_le_bytes(r.array()?);
        let mut docs = IndexMap::new();
        for _ in 0..n {
            let id = r.string()?;
            let len = r.u32()?;
            let n_terms = r.u32()?;
            let mut tf = BTreeMap::new();
            for _ in 0..n_terms {
                let t = r.string()?;
                let c = r.u32()?;
                if c == 0 || tf.insert(t, c).is_some() {
                    return Err(RankError::Format(format!("bad term table for {id:?}")));
                }
            }
            if tf.values().map(|&c| c as u64).sum::<u64>() != len as u64 {
                return Err(RankError::Format(format!(
                    "length of {id:?} disagrees with its term counts"
                )));
            }
            if docs.insert(id.clone(), Doc { len, tf }).is_some() {
                return Err(RankError::Format(format!("duplicate document {id:?}")));
            }
        }
        if r.pos != buf.len() {
            return Err(RankError::Format("trailing bytes".into()));
        }
        Self::from_docs(params, docs)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RankError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|source| RankError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RankError> {
        let path = path.as_ref();
        let buf = std::fs::read(path).map_err(|source| RankError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_bytes(&buf)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], RankError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| RankError::Format("truncated".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], RankError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32, RankError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn string(&mut self) -> Result<String, RankError> {
        let n = u16::from_le_bytes(self.array()?) as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| RankError::Format("id is not UTF-8".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn index(docs: &[(&str, &str)]) -> Bm25Index {
        let t: Vec<(&str, Vec<String>)> = docs.iter().map(|(i, d)| (*i, toks(d))).collect();
        Bm25Index::build(t.iter().map(|(i, d)| (*i, d.as_slice())), Bm25Params::default()).unwrap()
    }

    #[test]
    fn counting() {
        let ix = index(&[("x", "a b"), ("y", "a")]);
        assert_eq!(ix.df("a"), 2);
        assert_eq!(ix.df("b"), 1);
        assert_eq!(ix.avg_doc_len(), 1.5);
        assert_eq!(ix, index(&[("x", "a b"), ("y", "a")]));
    }

    #[test]
    fn counting_matches_dictionary_oracle() {
        let words = ["red", "blue", "dress", "jeans", "silk", "boots", "wool"];
        let docs: Vec<(String, String)> = (0..20)
            .map(|i| {
                let n = 1 + (i * 7) % 5;
                let d: Vec<&str> = (0..n).map(|j| words[(i * 3 + j * j) % words.len()]).collect();
                (format!("d{i:02}"), d.join(" "))
            })
            .collect();
        let refs: Vec<(&str, &str)> = docs.iter().map(|(i, d)| (i.as_str(), d.as_str())).collect();
        let ix = index(&refs);
        for w in words {
            let df = docs.iter().filter(|(_, d)| d.split(' ').any(|t| t == w)).count() as u32;
            assert_eq!(ix.df(w), df, "{w}");
            for (id, d) in &docs {
                assert_eq!(ix.tf(w, id), d.split(' ').filter(|t| *t == w).count() as u32);
            }
        }
        let total: usize = docs.iter().map(|(_, d)| d.split(' ').count()).sum();
        assert!((ix.avg_doc_len() - total as f64 / 20.0).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_fixture() {
        let ix = index(&[
            ("d1", "red summer dress"),
            ("d2", "blue denim jeans jeans"),
            ("d3", "red leather boots red"),
        ]);
        let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
        let s = |q: &str, d: &str| ix.score(&toks(q), d).unwrap();
        assert!(close(s("red dress", "d1"), 1.5674176674388653));
        assert_eq!(s("red dress", "d2"), 0.0);
        assert!(close(s("red dress", "d3"), 0.6301433699582716));
        assert!(close(s("jeans", "d2"), 1.3150176134561649));
        assert!(close(s("red", "d1"), 0.5077717780244109));
        assert!(close(s("red", "d3"), 0.6301433699582716));
    }

    #[test]
    fn discriminating_term() {
        let ix = index(&[("d1", "red dress"), ("d2", "blue jeans")]);
        let r = ix.topk("q", &toks("red"), 2).unwrap();
        assert_eq!(r.entries[0].item_id, "d1");
        assert!(r.entries[0].score > 0.0);
        assert_eq!(r.entries[1].score, 0.0);
    }

    #[test]
    fn unmatched_query_orders_by_id() {
        let ix = index(&[("c", "x"), ("a", "y"), ("b", "z")]);
        let r = ix.topk("q", &toks("nothing"), 3).unwrap();
        assert_eq!(r.item_ids().collect::<Vec<_>>(), ["a", "b", "c"]);
        assert!(r.entries.iter().all(|e| e.score == 0.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let none: Vec<(&str, &[String])> = Vec::new();
        assert!(matches!(
            Bm25Index::build(none, Bm25Params::default()),
            Err(RankError::EmptyIndex)
        ));
        let docs = [("a", vec!["x".to_string()])];
        let bad = Bm25Params { k1: 1.2, b: 1.5 };
        assert!(Bm25Index::build(docs.iter().map(|(i, d)| (*i, d.as_slice())), bad).is_err());
    }

    #[test]
    fn file_round_trip_and_corruption() {
        let ix = index(&[("d1", "red summer dress"), ("d2", "blue denim jeans jeans")]);
        let bytes = ix.to_bytes();
        assert_eq!(Bm25Index::from_bytes(&bytes).unwrap(), ix);
        assert!(Bm25Index::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Bm25Index::from_bytes(&bad).is_err());
        let mut long = bytes;
        long.push(0);
        assert!(Bm25Index::from_bytes(&long).is_err());
    }

    proptest! {
        #[test]
        fn vacuity_and_monotonicity(
            docs in prop::collection::vec(prop::collection::vec(0u8..6, 1..8), 1..8),
            query in prop::collection::vec(0u8..6, 1..4),
            pick in 0usize..64,
        ) {
            let word = |w: u8| format!("w{w}");
            let docs: Vec<Vec<String>> = docs.iter().map(|d| d.iter().map(|&w| word(w)).collect()).collect();
            let ids: Vec<String> = (0..docs.len()).map(|i| format!("d{i}")).collect();
            let query: Vec<String> = query.iter().map(|&w| word(w)).collect();
            let ix = Bm25Index::build(ids.iter().map(String::as_str).zip(docs.iter().map(Vec::as_slice)), Bm25Params::default()).unwrap();
            for (id, d) in ids.iter().zip(&docs) {
                if !d.iter().any(|t| query.contains(t)) {
                    prop_assert_eq!(ix.score(&query, id).unwrap(), 0.0);
                }
            }
            // raise tf of one query term in one doc by replacing a non-query
            // token, so |d|, the mean length and every query-term df elsewhere hold
            let target = pick % docs.len();
            let term = &query[pick % query.len()];
            if let Some(slot) = docs[target].iter().position(|t| !query.contains(t)) {
                let mut changed = docs.clone();
                changed[target][slot] = term.clone();
                let ix2 = Bm25Index::build(ids.iter().map(String::as_str).zip(changed.iter().map(Vec::as_slice)), Bm25Params::default()).unwrap();
                prop_assert!(ix2.score(&query, &ids[target]).unwrap() >= ix.score(&query, &ids[target]).unwrap());
            }
        }
    }
}
