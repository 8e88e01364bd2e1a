//! Batch objectives and their exact reverse-mode gradients.

use std::collections::HashMap;

use super::loss::{bce_loss, dot, info_nce, norm, sigmoid, BCE_EPS};
use super::train::Objective;
use super::{Scalar, Tower, TowerError, Trace, TwoTower};
use crate::corpus::Label;

/// One (request, item) training pair of base embeddings.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a, F> {
    pub request: &'a [F],
    pub item: &'a [F],
    pub label: Label,
    pub weight: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Batch<'a, F> {
    pub examples: Vec<Example<'a, F>>,
    /// `(row, column)` example indices removed from the contrastive softmax:
    /// the column's item is a labeled positive of the row's request.
    pub exclusions: Vec<(usize, usize)>,
}

impl<'a, F> Batch<'a, F> {
    pub fn new(examples: Vec<Example<'a, F>>) -> Self {
        Self {
            examples,
            exclusions: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveConfig {
    pub objective: Objective,
    pub alpha: f64,
    pub beta: f64,
    pub temperature: f64,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            objective: Objective::Composite,
            alpha: 1.0,
            beta: 1.0,
            temperature: 0.07,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BatchLoss {
    pub total: f64,
    /// Weighted mean BCE over all pairs (composite objective).
    pub bce: Option<f64>,
    /// InfoNCE over the positive pairs (composite objective, when computed).
    pub contrastive: Option<f64>,
    /// Mean cosine embedding loss (cosine objective).
    pub cosine: Option<f64>,
    /// `beta > 0` but the batch had fewer than two positives.
    pub contrastive_skipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TowerGrads {
    pub layers: Vec<LayerGrads>,
}

impl TowerGrads {
    pub fn zeros_like<F: Scalar>(tower: &Tower<F>) -> Self {
        Self {
            layers: tower
                .layers()
                .iter()
                .map(|l| LayerGrads {
                    weight: vec![0.0; l.weight().len()],
                    bias: vec![0.0; l.bias().len()],
                })
                .collect(),
        }
    }

    /// Same order as [`Tower::params`].
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weight.iter().chain(&l.bias))
    }

    fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()))
    }
}

/// Gradients shaped like a [`TwoTower`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub request: TowerGrads,
    pub item: TowerGrads,
}

impl Gradients {
    pub fn zeros_like<F: Scalar>(model: &TwoTower<F>) -> Self {
        Self {
            request: TowerGrads::zeros_like(model.request_tower()),
            item: TowerGrads::zeros_like(model.item_tower()),
        }
    }

    /// Same order as [`TwoTower::params`].
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.request.iter().chain(self.item.iter())
    }

    pub fn scale(&mut self, c: f64) {
        for g in self.request.iter_mut().chain(self.item.iter_mut()) {
            *g *= c;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|g| g.is_finite())
    }
}

struct Forward<F> {
    u: Vec<Trace<F>>,
    v: Vec<Trace<F>>,
}

fn run_forward<F: Scalar>(model: &TwoTower<F>, batch: &Batch<F>) -> Result<Forward<F>, TowerError> {
    let mut u = Vec::with_capacity(batch.examples.len());
    let mut v = Vec::with_capacity(batch.examples.len());
    for ex in &batch.examples {
        u.push(model.request_tower().forward_trace(ex.request)?);
        v.push(model.item_tower().forward_trace(ex.item)?);
    }
    Ok(Forward { u, v })
}

fn axpy<F: Scalar>(acc: &mut [f64], a: f64, x: &[F]) {
    for (o, &xi) in acc.iter_mut().zip(x) {
        *o += a * xi.as_f64();
    }
}

/// Loss and dLoss/d(tower outputs) for the whole batch.
#[allow(clippy::type_complexity)]
fn objective<F: Scalar>(
    fwd: &Forward<F>,
    batch: &Batch<F>,
    cfg: &ObjectiveConfig,
) -> Result<(BatchLoss, Vec<Vec<f64>>, Vec<Vec<f64>>), TowerError> {
    let n = batch.examples.len();
    let dim = fwd.u.first().map_or(0, |t| t.output.len());
    let mut du = vec![vec![0.0; dim]; n];
    let mut dv = vec![vec![0.0; dim]; n];
    let mut out = BatchLoss::default();
    if n == 0 {
        return Ok((out, du, dv));
    }

    match cfg.objective {
        Objective::Composite => {
            let mut bce_sum = 0.0;
            for (i, ex) in batch.examples.iter().enumerate() {
                let (u, v) = (&fwd.u[i].output, &fwd.v[i].output);
                let s = dot(u, v);
                let p = sigmoid(s);
                let target = ex.label.target();
                bce_sum += ex.weight * bce_loss(p, target);
                // the clamp is flat outside (eps, 1 - eps)
                if p > BCE_EPS && p < 1.0 - BCE_EPS {
                    let g = cfg.alpha * ex.weight * (p - target) / n as f64;
                    axpy(&mut du[i], g, v);
                    axpy(&mut dv[i], g, u);
                }
            }
            let bce = bce_sum / n as f64;
            out.bce = Some(bce);
            out.total = cfg.alpha * bce;

            if cfg.beta > 0.0 {
                let pos: Vec<usize> = (0..n).filter(|&i| batch.examples[i].label.is_positive()).collect();
                if pos.len() < 2 {
                    out.contrastive_skipped = true;
                } else {
                    let b = pos.len();
                    let mut scores = Vec::with_capacity(b * b);
                    for &i in &pos {
                        for &j in &pos {
                            scores.push(dot(&fwd.u[i].output, &fwd.v[j].output));
                        }
                    }
                    let mask = exclusion_mask(&pos, &batch.exclusions);
                    let nce = info_nce(&scores, b, cfg.temperature, mask.as_deref())?;
                    for (a, &i) in pos.iter().enumerate() {
                        for (c, &j) in pos.iter().enumerate() {
                            let g = cfg.beta * nce.grad[a * b + c];
                            if g != 0.0 {
                                axpy(&mut du[i], g, &fwd.v[j].output);
                                axpy(&mut dv[j], g, &fwd.u[i].output);
                            }
                        }
                    }
                    out.contrastive = Some(nce.loss);
                    out.total += cfg.beta * nce.loss;
                }
            }
        }
        Objective::CosineEmbedding => {
            let mut sum = 0.0;
            for (i, ex) in batch.examples.iter().enumerate() {
                let (u, v) = (&fwd.u[i].output, &fwd.v[i].output);
                let (nu, nv) = (norm(u), norm(v));
                if nu == 0.0 || nv == 0.0 {
                    return Err(TowerError::ZeroNorm);
                }
                let c = dot(u, v) / (nu * nv);
                let (loss, dl_dc) = match ex.label {
                    Label::Positive => (1.0 - c, -1.0),
                    Label::Negative if c > 0.0 => (c, 1.0),
                    Label::Negative => (0.0, 0.0),
                };
                sum += ex.weight * loss;
                let g = ex.weight * dl_dc / n as f64;
                if g != 0.0 {
                    // dcos/du = v / (|u||v|) - cos * u / |u|^2
                    axpy(&mut du[i], g / (nu * nv), v);
                    axpy(&mut du[i], -g * c / (nu * nu), u);
                    axpy(&mut dv[i], g / (nu * nv), u);
                    axpy(&mut dv[i], -g * c / (nv * nv), v);
                }
            }
            let mean = sum / n as f64;
            out.cosine = Some(mean);
            out.total = mean;
        }
    }

    if !out.total.is_finite() {
        let max_score = (0..n)
            .map(|i| dot(&fwd.u[i].output, &fwd.v[i].output).abs())
            .fold(0.0, f64::max);
        let positives = batch.examples.iter().filter(|e| e.label.is_positive()).count();
        return Err(TowerError::NonFiniteLoss(format!(
            "batch of {n} pairs ({positives} positive), max |score| {max_score:e}, parts {out:?}"
        )));
    }
    Ok((out, du, dv))
}

fn exclusion_mask(pos: &[usize], exclusions: &[(usize, usize)]) -> Option<Vec<bool>> {
    if exclusions.is_empty() {
        return None;
    }
    let at: HashMap<usize, usize> = pos.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let b = pos.len();
    let mut mask = vec![false; b * b];
    for (r, c) in exclusions {
        if let (Some(&a), Some(&k)) = (at.get(r), at.get(c)) {
            if a != k {
                mask[a * b + k] = true;
            }
        }
    }
    Some(mask)
}

/// Objective value of a batch without gradients.
pub fn batch_loss<F: Scalar>(
    model: &TwoTower<F>,
    batch: &Batch<F>,
    cfg: &ObjectiveConfig,
) -> Result<BatchLoss, TowerError> {
    let fwd = run_forward(model, batch)?;
    Ok(objective(&fwd, batch, cfg)?.0)
}

/// Objective value and exact parameter gradients of a batch.
pub fn loss_and_grad<F: Scalar>(
    model: &TwoTower<F>,
    batch: &Batch<F>,
    cfg: &ObjectiveConfig,
) -> Result<(BatchLoss, Gradients), TowerError> {
    let fwd = run_forward(model, batch)?;
    let (loss, du, dv) = objective(&fwd, batch, cfg)?;
    let mut grads = Gradients::zeros_like(model);
    for i in 0..batch.examples.len() {
        model.request_tower().backward(&fwd.u[i], &du[i], &mut grads.request);
        model.item_tower().backward(&fwd.v[i], &dv[i], &mut grads.item);
    }
    if !grads.is_finite() {
        return Err(TowerError::NonFiniteLoss(format!(
            "finite loss {} but non-finite gradient over {} pairs",
            loss.total,
            batch.examples.len()
        )));
    }
    Ok((loss, grads))
}
