//! The batch commands: synth, ingest, train, index and eval.

use std::path::{Path, PathBuf};

use reqrank_core::corpus::synthetic::{separable_corpus, SyntheticSpec};
use reqrank_core::corpus::{
    adapt_reviews, load_corpus, read_jsonl, sample_negatives, split, tag_categories, AdaptReport, LoadReport,
    NegativeReport, RawText, ReviewRecord,
};
use reqrank_core::eval::{
    build_pools, evaluate_run, render_table, Averaging, EvalReport, PoolPolicy, RelevanceJudgment,
};
use reqrank_core::rank::DenseIndex;
use reqrank_core::towers::{train, TrainError, TrainingLog};
use reqrank_core::{Corpus, TwoTower};
use serde::{Deserialize, Serialize};
use tracing::{info, warn};

use crate::config::{training_log_path, ModelEntry, ModelKind, PipelineConfig, SplitName};
use crate::data::{self, ITEMS_FILE, PAIRS_FILE, REQUESTS_FILE};
use crate::error::{io_error, CliError};
use crate::roster::{build_bm25, RequestView, Scorer};

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::runtime)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e)),
        _ => Ok(()),
    }
}

fn require<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path, CliError> {
    let p = p
        .as_deref()
        .ok_or_else(|| CliError::usage(format!("paths.{key} is not configured")))?;
    if !p.exists() {
        return Err(CliError::usage(format!("paths.{key}: {} not found", p.display())));
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthReport {
    pub requests: usize,
    pub items: usize,
    pub interactions: usize,
}

/// Writes the separable synthetic corpus (positives only) as raw input files.
pub fn synth(spec: &SyntheticSpec, out: &Path) -> Result<SynthReport, CliError> {
    std::fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
    let corpus = separable_corpus(spec);
    corpus.write_requests(&out.join(REQUESTS_FILE))?;
    corpus.write_items(&out.join(ITEMS_FILE))?;
    corpus.write_pairs(&out.join("interactions.jsonl"))?;
    Ok(SynthReport {
        requests: corpus.request_count(),
        items: corpus.item_count(),
        interactions: corpus.pairs().len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub requests: usize,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub load: Option<LoadReport>,
    pub adapt: Option<AdaptReport>,
    pub tagged_requests: usize,
    pub negatives: NegativeReport,
    pub train: SplitCounts,
    pub dev: SplitCounts,
    pub test: SplitCounts,
}

/// Load or adapt, tag, sample negatives, split, and write the normalized
/// corpus plus one pair file per split.
pub fn ingest(cfg: &PipelineConfig) -> Result<IngestReport, CliError> {
    let p = &cfg.paths;
    let (corpus, load, adapt) = if p.reviews.is_some() {
        let reviews: Vec<ReviewRecord> = read_jsonl(require(&p.reviews, "reviews")?)?
            .into_iter()
            .map(|(_, r)| r)
            .collect();
        let catalog: Vec<RawText> = read_jsonl(require(&p.items, "items")?)?
            .into_iter()
            .map(|(_, r)| r)
            .collect();
        let (c, report) = adapt_reviews(&reviews, &catalog)?;
        (c, None, Some(report))
    } else {
        let (c, report) = load_corpus(
            require(&p.requests, "requests")?,
            require(&p.items, "items")?,
            require(&p.interactions, "interactions")?,
        )?;
        (c, Some(report), None)
    };
    let lexicon = data::lexicon(cfg)?;
    let corpus = corpus.map_requests(|r| tag_categories(r, &lexicon));
    let tagged_requests = corpus.requests().filter(|r| !r.categories.is_empty()).count();

    let (corpus, negatives) = if cfg.ingest.negative_ratio > 0.0 {
        sample_negatives(&corpus, cfg.ingest.negative_ratio, cfg.ingest.seed)?
    } else {
        (corpus, NegativeReport::default())
    };
    let splits = split(&corpus, &cfg.ingest.split)?;

    std::fs::create_dir_all(cfg.paths.corpus.join("splits")).map_err(|e| io_error(&cfg.paths.corpus, e))?;
    corpus.write_requests(&cfg.corpus_file(REQUESTS_FILE))?;
    corpus.write_items(&cfg.corpus_file(ITEMS_FILE))?;
    corpus.write_pairs(&cfg.corpus_file(PAIRS_FILE))?;
    let counts = |c: &Corpus| SplitCounts {
        requests: c.pairs_by_request().len(),
        pairs: c.pairs().len(),
    };
    for (name, c) in [
        (SplitName::Train, &splits.train),
        (SplitName::Dev, &splits.dev),
        (SplitName::Test, &splits.test),
    ] {
        c.write_pairs(&cfg.split_file(name))?;
    }
    let report = IngestReport {
        load,
        adapt,
        tagged_requests,
        negatives,
        train: counts(&splits.train),
        dev: counts(&splits.dev),
        test: counts(&splits.test),
    };
    write_json(&cfg.corpus_file("ingest_report.json"), &report)?;
    info!(
        requests = corpus.request_count(),
        items = corpus.item_count(),
        pairs = corpus.pairs().len(),
        "ingested corpus into {}",
        cfg.paths.corpus.display()
    );
    Ok(report)
}

fn pick_wlite<'a>(cfg: &'a PipelineConfig, tag: Option<&str>) -> Result<&'a ModelEntry, CliError> {
    let entry = match tag {
        Some(t) => cfg
            .model(t)
            .ok_or_else(|| CliError::usage(format!("unknown model tag {t:?}")))?,
        None => {
            let d = cfg.default_model();
            if d.kind == ModelKind::Wlite {
                d
            } else {
                cfg.models
                    .iter()
                    .find(|m| m.kind == ModelKind::Wlite)
                    .ok_or_else(|| CliError::usage("the roster has no WLITE model to train"))?
            }
        }
    };
    if entry.kind != ModelKind::Wlite {
        return Err(CliError::usage(format!(
            "model {} is {:?}, not trainable",
            entry.tag, entry.kind
        )));
    }
    Ok(entry)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub model_tag: String,
    pub checkpoint: PathBuf,
    pub log: TrainingLog,
}

pub fn train_cmd(cfg: &PipelineConfig, tag: Option<&str>, out: Option<&Path>) -> Result<TrainSummary, CliError> {
    let entry = pick_wlite(cfg, tag)?;
    let checkpoint = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| entry.checkpoint.clone().expect("resolved"));
    let train_set = data::load_ingested(cfg, Some(SplitName::Train))?;
    let dev_set = data::load_ingested(cfg, Some(SplitName::Dev))?;
    let base = data::base_embeddings(cfg, &train_set)?;
    let log_path = training_log_path(&checkpoint);
    let (model, log) = match train(&cfg.train, &train_set, &base, Some(&dev_set)) {
        Ok(v) => v,
        Err(TrainError::Diverged {
            epoch,
            batch,
            message,
            log,
        }) => {
            write_json(&log_path, &log)?;
            return Err(CliError::runtime(format!(
                "training diverged in epoch {epoch}, batch {batch}: {message} (log written to {})",
                log_path.display()
            )));
        }
        Err(e) => return Err(e.into()),
    };
    ensure_parent(&checkpoint)?;
    model.save(&checkpoint)?;
    write_json(&log_path, &log)?;
    if out.is_none() {
        if let Some(ix) = entry.index.as_ref().filter(|p| p.exists()) {
            warn!("removing stale dense index {}", ix.display());
            std::fs::remove_file(ix).map_err(|e| io_error(ix, e))?;
        }
    }
    if let Some(last) = log.epochs.last() {
        info!(epoch = last.epoch, loss = last.mean_loss, "trained {}", entry.tag);
    }
    Ok(TrainSummary {
        model_tag: entry.tag.clone(),
        checkpoint,
        log,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSummary {
    pub model_tag: String,
    pub kind: ModelKind,
    pub path: PathBuf,
    pub rows: usize,
}

/// Writes the catalog index of each WLITE and BM25 model (or only `tag`).
pub fn index_cmd(cfg: &PipelineConfig, tag: Option<&str>) -> Result<Vec<IndexSummary>, CliError> {
    if let Some(t) = tag {
        cfg.model(t)
            .ok_or_else(|| CliError::usage(format!("unknown model tag {t:?}")))?;
    }
    let corpus = data::load_ingested(cfg, None)?;
    let mut out = Vec::new();
    for entry in cfg.models.iter().filter(|m| tag.is_none_or(|t| m.tag == t)) {
        let Some(path) = entry.index.clone() else { continue };
        ensure_parent(&path)?;
        let rows = match entry.kind {
            ModelKind::Wlite => {
                let base = data::base_embeddings(cfg, &corpus)?;
                let ckpt = entry.checkpoint.as_ref().expect("resolved");
                if !ckpt.exists() {
                    return Err(CliError::usage(format!(
                        "{} not found; run `reqrank train` first",
                        ckpt.display()
                    )));
                }
                let model = TwoTower::load(ckpt)?;
                let index = DenseIndex::build(corpus.items().map(|i| i.id.as_str()), model.item_tower(), &base)?;
                index.save(&path)?;
                index.len()
            }
            ModelKind::Bm25 => {
                let index = build_bm25(entry, &corpus)?;
                index.save(&path)?;
                index.doc_count()
            }
            ModelKind::Random => continue,
        };
        info!(rows, "indexed {} into {}", entry.tag, path.display());
        out.push(IndexSummary {
            model_tag: entry.tag.clone(),
            kind: entry.kind,
            path,
            rows,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub tag: String,
    pub kind: ModelKind,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub split: SplitName,
    pub pool: PoolPolicy,
    pub k: Vec<usize>,
    pub averaging: Averaging,
    pub models: Vec<ModelReport>,
}

pub const EVAL_JSON: &str = "eval.json";
pub const EVAL_TABLE: &str = "eval.txt";

/// Ranks every request's candidate pool of the evaluation split with each
/// roster model (or only `tag`) and writes `eval.json` and `eval.txt`.
pub fn eval_cmd(cfg: &PipelineConfig, tag: Option<&str>, out_dir: Option<&Path>) -> Result<EvalOutput, CliError> {
    if let Some(t) = tag {
        cfg.model(t)
            .ok_or_else(|| CliError::usage(format!("unknown model tag {t:?}")))?;
    }
    let corpus = data::load_ingested(cfg, Some(cfg.eval.split))?;
    if corpus.pairs().is_empty() {
        return Err(CliError::usage(format!(
            "the {} split has no pairs",
            cfg.eval.split.as_str()
        )));
    }
    let base = data::base_embeddings(cfg, &corpus)?;
    let pools = build_pools(&corpus, cfg.eval.pool, cfg.eval.seed);
    let judgments = RelevanceJudgment::from_corpus(&corpus);
    let catalog: Vec<&str> = corpus.items().map(|i| i.id.as_str()).collect();

    let mut models = Vec::new();
    for entry in cfg.models.iter().filter(|m| tag.is_none_or(|t| m.tag == t)) {
        let scorer = Scorer::load(entry, &corpus, &base, cfg.eval.seed, false)?;
        let mut rankings = Vec::with_capacity(pools.len());
        for pool in &pools {
            let request = corpus.request(&pool.request_id).expect("pools come from corpus pairs");
            let vec = match entry.kind {
                ModelKind::Wlite => Some(base.request(&request.id)?),
                _ => None,
            };
            let view = RequestView {
                id: &request.id,
                tokens: &request.tokens,
                base: vec,
            };
            let items: Vec<&str> = pool.items.iter().map(String::as_str).collect();
            rankings.push(scorer.rank(&view, Some(&items), &catalog, None)?);
        }
        let report = evaluate_run(&rankings, &judgments, &cfg.eval.k, cfg.eval.averaging)?;
        info!(
            ndcg = report.ndcg,
            requests = report.n_requests,
            "evaluated {}",
            entry.tag
        );
        models.push(ModelReport {
            tag: entry.tag.clone(),
            kind: entry.kind,
            report,
        });
    }
    let output = EvalOutput {
        split: cfg.eval.split,
        pool: cfg.eval.pool,
        k: cfg.eval.k.clone(),
        averaging: cfg.eval.averaging,
        models,
    };
    let dir = out_dir.unwrap_or(&cfg.paths.reports);
    write_json(&dir.join(EVAL_JSON), &output)?;
    let rows: Vec<(&str, &EvalReport)> = output.models.iter().map(|m| (m.tag.as_str(), &m.report)).collect();
    std::fs::write(dir.join(EVAL_TABLE), render_table(&rows)).map_err(|e| io_error(dir, e))?;
    Ok(output)
}
