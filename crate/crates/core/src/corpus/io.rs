use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, Interaction, ItemDescription, LabeledPair, TextRequest};

/// `{"id": ..., "text": ...}` line of a requests or items file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawText {
    pub id: String,
    pub text: String,
}

/// `{"request_id": ..., "item_id": ..., "interaction": ...}` line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawInteraction {
    pub request_id: String,
    pub item_id: String,
    pub interaction: Interaction,
}

impl From<&LabeledPair> for RawInteraction {
    fn from(p: &LabeledPair) -> Self {
        Self {
            request_id: p.request_id.clone(),
            item_id: p.item_id.clone(),
            interaction: p.interaction,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub requests: usize,
    pub items: usize,
    pub pairs: usize,
    pub duplicate_requests: usize,
    pub duplicate_items: usize,
    pub duplicate_pairs: usize,
}

/// Reads a line-delimited JSON file; blank lines are skipped.
/// Returns each record with its 1-based line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>, CorpusError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: display.clone(),
        source,
    })?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: display.clone(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            path: display.clone(),
            line: n + 1,
            message: e.to_string(),
        })?;
        out.push((n + 1, rec));
    }
    Ok(out)
}

pub fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    records: impl IntoIterator<Item = &'a T>,
) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| io_err(e.into()))?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

fn require_tokens(path: &Path, line: usize, kind: &str, id: &str, tokens: &[String]) -> Result<(), CorpusError> {
    if tokens.is_empty() {
        return Err(CorpusError::Malformed {
            path: path.display().to_string(),
            line,
            message: format!("{kind} `{id}` has no tokens"),
        });
    }
    Ok(())
}

/// Loads requests, items and interactions from line-delimited JSON files.
///
/// Repeated ids with identical text collapse into one record; repeated ids
/// with differing text are an error, as is any interaction naming an id
/// absent from the requests or items file.
pub fn load_corpus(
    requests_path: &Path,
    items_path: &Path,
    interactions_path: &Path,
) -> Result<(Corpus, LoadReport), CorpusError> {
    let mut corpus = Corpus::default();
    let mut report = LoadReport::default();

    for (line, rec) in read_jsonl::<RawText>(requests_path)? {
        let r = TextRequest::new(rec.id, rec.text);
        require_tokens(requests_path, line, "request", &r.id, &r.tokens)?;
        if !corpus.insert_request(r)? {
            report.duplicate_requests += 1;
        }
    }
    for (line, rec) in read_jsonl::<RawText>(items_path)? {
        let i = ItemDescription::new(rec.id, rec.text);
        require_tokens(items_path, line, "item", &i.id, &i.tokens)?;
        if !corpus.insert_item(i)? {
            report.duplicate_items += 1;
        }
    }

    let shown = interactions_path.display().to_string();
    let mut seen = HashSet::new();
    for (line, rec) in read_jsonl::<RawInteraction>(interactions_path)? {
        let p = LabeledPair::new(rec.request_id, rec.item_id, rec.interaction);
        corpus.check_pair(&p, &shown, line)?;
        if seen.insert((p.request_id.clone(), p.item_id.clone())) {
            corpus.pairs.push(p);
        } else {
            report.duplicate_pairs += 1;
        }
    }

    report.requests = corpus.request_count();
    report.items = corpus.item_count();
    report.pairs = corpus.pairs().len();
    Ok((corpus, report))
}

impl Corpus {
    pub fn write_requests(&self, path: &Path) -> Result<(), CorpusError> {
        let recs: Vec<RawText> = self
            .requests()
            .map(|r| RawText {
                id: r.id.clone(),
                text: r.raw.clone(),
            })
            .collect();
        write_jsonl(path, &recs)
    }

    pub fn write_items(&self, path: &Path) -> Result<(), CorpusError> {
        let recs: Vec<RawText> = self
            .items()
            .map(|i| RawText {
                id: i.id.clone(),
                text: i.raw.clone(),
            })
            .collect();
        write_jsonl(path, &recs)
    }

    pub fn write_pairs(&self, path: &Path) -> Result<(), CorpusError> {
        let recs: Vec<RawInteraction> = self.pairs().iter().map(RawInteraction::from).collect();
        write_jsonl(path, &recs)
    }
}
