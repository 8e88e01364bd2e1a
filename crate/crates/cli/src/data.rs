//! Loading the ingested corpus and its base embeddings.

use reqrank_core::corpus::{load_corpus, tag_categories, CategoryLexicon};
use reqrank_core::embed::{BaseEmbeddings, EmbeddingStore, HashEmbedder};
use reqrank_core::Corpus;

use crate::config::{PipelineConfig, SplitName};
use crate::error::CliError;

pub const REQUESTS_FILE: &str = "requests.jsonl";
pub const ITEMS_FILE: &str = "items.jsonl";
pub const PAIRS_FILE: &str = "pairs.jsonl";

pub fn lexicon(cfg: &PipelineConfig) -> Result<CategoryLexicon, CliError> {
    match &cfg.paths.lexicon {
        Some(p) => Ok(CategoryLexicon::load(p)?),
        None => Ok(CategoryLexicon::garments()),
    }
}

/// The ingested corpus with the pairs of one split, or all pairs for `None`.
/// Requests are tagged with the configured lexicon.
pub fn load_ingested(cfg: &PipelineConfig, split: Option<SplitName>) -> Result<Corpus, CliError> {
    let pairs = match split {
        Some(s) => cfg.split_file(s),
        None => cfg.corpus_file(PAIRS_FILE),
    };
    let requests = cfg.corpus_file(REQUESTS_FILE);
    if !requests.exists() {
        return Err(CliError::usage(format!(
            "{} not found; run `reqrank ingest` first",
            requests.display()
        )));
    }
    let (corpus, _) = load_corpus(&requests, &cfg.corpus_file(ITEMS_FILE), &pairs)?;
    let lexicon = lexicon(cfg)?;
    Ok(corpus.map_requests(|r| tag_categories(r, &lexicon)))
}

/// Precomputed stores when configured, otherwise the hash embedder.
pub fn base_embeddings(cfg: &PipelineConfig, corpus: &Corpus) -> Result<BaseEmbeddings, CliError> {
    match (&cfg.embedding.requests, &cfg.embedding.items) {
        (Some(r), Some(i)) => Ok(BaseEmbeddings::from_stores(
            &EmbeddingStore::load(r)?,
            &EmbeddingStore::load(i)?,
        )?),
        _ => Ok(BaseEmbeddings::hashed(corpus, &hash_embedder(cfg, cfg.embedding.dim)?)),
    }
}

pub fn hash_embedder(cfg: &PipelineConfig, dim: usize) -> Result<HashEmbedder, CliError> {
    HashEmbedder::new(dim, cfg.embedding.seed).map_err(|e| CliError::usage(e.to_string()))
}

pub fn file_backed(cfg: &PipelineConfig) -> bool {
    cfg.embedding.requests.is_some()
}
