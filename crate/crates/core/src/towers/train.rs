use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::grad::{loss_and_grad, Batch, Example, ObjectiveConfig};
use super::{Adam, AdamConfig, TowerError, TowerSpec, TwoTower};
use crate::corpus::{Corpus, Interaction};
use crate::embed::{BaseEmbeddings, EmbedError};
use crate::eval::{evaluate_run, Averaging, EvalError, RelevanceJudgment};
use crate::hashing::keyed_rng;
use crate::rank::{DenseIndex, RankError, RankedList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Objective {
    /// `alpha * BCE + beta * InfoNCE`.
    Composite,
    CosineEmbedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub objective: Objective,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub alpha: f64,
    pub beta: f64,
    pub temperature: f64,
    pub seed: u64,
    pub tower: TowerSpec,
    /// Loss weight of NOTTRY positives relative to TRY and KEEP.
    pub nottry_weight: f64,
    /// Drop in-batch items that are also labeled positives of a row's
    /// request from that row's contrastive softmax.
    pub mask_accidental_hits: bool,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            objective: Objective::Composite,
            lr: adam.lr,
            epochs: 10,
            batch_size: 64,
            alpha: 1.0,
            beta: 1.0,
            temperature: 0.07,
            seed: 42,
            tower: TowerSpec::default(),
            nottry_weight: 1.0,
            mask_accidental_hits: true,
            adam_beta1: adam.beta1,
            adam_beta2: adam.beta2,
            adam_eps: adam.eps,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size < 2 {
            return bad("batch_size must be at least 2");
        }
        if !nonneg(self.lr) {
            return bad("lr must be finite and nonnegative");
        }
        if !nonneg(self.alpha) || !nonneg(self.beta) {
            return bad("alpha and beta must be finite and nonnegative");
        }
        if self.objective == Objective::Composite && self.alpha + self.beta == 0.0 {
            return bad("alpha + beta must be positive for the composite objective");
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return bad("temperature must be positive");
        }
        if !nonneg(self.nottry_weight) {
            return bad("nottry_weight must be finite and nonnegative");
        }
        if !(0.0..1.0).contains(&self.adam_beta1)
            || !(0.0..1.0).contains(&self.adam_beta2)
            || !(self.adam_eps.is_finite() && self.adam_eps > 0.0)
        {
            return bad("adam betas must lie in [0, 1) and eps must be positive");
        }
        if self.tower.out_dim == 0 || self.tower.hidden.contains(&0) {
            return bad("tower widths must be positive");
        }
        Ok(())
    }

    pub fn objective_config(&self) -> ObjectiveConfig {
        ObjectiveConfig {
            objective: self.objective,
            alpha: self.alpha,
            beta: self.beta,
            temperature: self.temperature,
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevMetrics {
    pub requests: usize,
    pub prec_at_1: f64,
    pub ndcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub batches: usize,
    /// Pair-weighted mean of the batch objectives.
    pub mean_loss: f64,
    /// Batches whose contrastive term was skipped for lack of positives.
    pub contrastive_skipped: usize,
    pub dev: Option<DevMetrics>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub pairs: usize,
    pub params: usize,
    pub steps: u64,
    pub epochs: Vec<EpochLog>,
}

impl TrainingLog {
    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.mean_loss)
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("the training corpus has no labeled pairs")]
    NoPairs,
    #[error("embeddings do not cover the corpus: {0}")]
    Coverage(#[from] EmbedError),
    #[error("training diverged in epoch {epoch}, batch {batch}: {message}")]
    Diverged {
        epoch: usize,
        batch: usize,
        message: String,
        log: Box<TrainingLog>,
    },
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error(transparent)]
    Rank(#[from] RankError),
}

/// Ranks each request's labeled pool (its positives and negatives) with the
/// model. Requests without pairs are skipped.
pub fn rank_labeled_pools(
    model: &TwoTower<f32>,
    corpus: &Corpus,
    base: &BaseEmbeddings,
) -> Result<Vec<RankedList>, RankError> {
    let index = DenseIndex::build(
        corpus.pairs().iter().map(|p| p.item_id.as_str()),
        model.item_tower(),
        base,
    )?;
    let mut out = Vec::new();
    for (request, pairs) in corpus.pairs_by_request() {
        let u = model.project_request(base.request(request)?)?;
        let pool: Vec<&str> = pairs.iter().map(|p| p.item_id.as_str()).collect();
        out.push(index.rank_pool(request, &u, &pool, None)?);
    }
    Ok(out)
}

fn dev_metrics(model: &TwoTower<f32>, dev: &Corpus, base: &BaseEmbeddings) -> Result<Option<DevMetrics>, TrainError> {
    if dev.pairs().is_empty() {
        return Ok(None);
    }
    let rankings = rank_labeled_pools(model, dev, base)?;
    match evaluate_run(&rankings, &RelevanceJudgment::from_corpus(dev), &[1], Averaging::Macro) {
        Ok(r) => Ok(Some(DevMetrics {
            requests: r.n_requests,
            prec_at_1: r.precision(1).expect("k=1 requested"),
            ndcg: r.ndcg,
        })),
        Err(EvalError::NothingToAverage) => Ok(None),
        Err(e) => unreachable!("dev judgments are derived from the same pairs: {e}"),
    }
}

struct Row<'a> {
    request: &'a str,
    item: &'a str,
    example: Example<'a, f32>,
}

/// Trains a fresh model with Adam. Single-threaded: the result depends only
/// on the config, the corpus and the embeddings.
pub fn train(
    config: &TrainConfig,
    corpus: &Corpus,
    base: &BaseEmbeddings,
    dev: Option<&Corpus>,
) -> Result<(TwoTower<f32>, TrainingLog), TrainError> {
    config.validate()?;
    if corpus.pairs().is_empty() {
        return Err(TrainError::NoPairs);
    }
    base.check_covers(corpus)?;
    if let Some(dev) = dev {
        base.check_covers(dev)?;
    }

    let rows = corpus
        .pairs()
        .iter()
        .map(|p| {
            let weight = if p.interaction == Interaction::NotTry {
                config.nottry_weight
            } else {
                1.0
            };
            Ok(Row {
                request: &p.request_id,
                item: &p.item_id,
                example: Example {
                    request: base.request(&p.request_id)?,
                    item: base.item(&p.item_id)?,
                    label: p.label(),
                    weight,
                },
            })
        })
        .collect::<Result<Vec<_>, EmbedError>>()?;
    let positives: HashMap<&str, BTreeSet<&str>> = corpus.positives();

    let mut model = TwoTower::init(base.dim(), &config.tower, config.seed);
    let mut opt = Adam::new(config.adam(), &model);
    let objective = config.objective_config();
    let mut log = TrainingLog {
        pairs: rows.len(),
        params: model.param_count(),
        ..Default::default()
    };
    let mut order: Vec<usize> = (0..rows.len()).collect();

    for epoch in 1..=config.epochs {
        order.sort_unstable();
        order.shuffle(&mut keyed_rng(config.seed, &format!("train/epoch-{epoch}")));
        let mut weighted = 0.0;
        let mut skipped = 0;
        let mut batches = 0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let mut batch = Batch::new(chunk.iter().map(|&i| rows[i].example).collect());
            if config.mask_accidental_hits {
                batch.exclusions = accidental_hits(chunk, &rows, &positives);
            }
            let (loss, grads) = match loss_and_grad(&model, &batch, &objective) {
                Ok(v) => v,
                Err(TowerError::NonFiniteLoss(message)) => {
                    log.steps = opt.steps();
                    return Err(TrainError::Diverged {
                        epoch,
                        batch: b,
                        message,
                        log: Box::new(log),
                    });
                }
                Err(e) => return Err(e.into()),
            };
            opt.step(&mut model, &grads);
            weighted += loss.total * chunk.len() as f64;
            skipped += usize::from(loss.contrastive_skipped);
            batches += 1;
        }
        let dev = match dev {
            Some(d) => dev_metrics(&model, d, base)?,
            None => None,
        };
        log.epochs.push(EpochLog {
            epoch,
            batches,
            mean_loss: weighted / rows.len() as f64,
            contrastive_skipped: skipped,
            dev,
        });
    }
    log.steps = opt.steps();
    Ok((model, log))
}

fn accidental_hits(chunk: &[usize], rows: &[Row], positives: &HashMap<&str, BTreeSet<&str>>) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (a, &i) in chunk.iter().enumerate() {
        let Some(pos) = positives.get(rows[i].request) else {
            continue;
        };
        for (c, &j) in chunk.iter().enumerate() {
            if a != c && rows[j].example.label.is_positive() && pos.contains(rows[j].item) {
                out.push((a, c));
            }
        }
    }
    out
}
