//! The trainable half of the model: two MLP towers projecting frozen request
//! and item embeddings into a shared space where relevance is a dot product.
//!
//! Towers are generic over the parameter precision. Production models use
//! `f32`; gradient checks run the same code in `f64`. Losses and gradients are
//! always accumulated in `f64`.

mod adam;
mod checkpoint;
mod grad;
mod loss;
mod train;

use rand::distr::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::EmbedError;
use crate::hashing::keyed_rng;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use grad::{
    batch_loss, loss_and_grad, Batch, BatchLoss, Example, Gradients, LayerGrads, ObjectiveConfig, TowerGrads,
};
pub use loss::{
    bce_loss, contrastive_loss, cosine_embedding_loss, cosine_similarity, info_nce, predict_prob, score, sigmoid,
    InfoNce, BCE_EPS,
};
pub use train::{rank_labeled_pools, train, DevMetrics, EpochLog, Objective, TrainConfig, TrainError, TrainingLog};

#[derive(Debug, Error)]
pub enum TowerError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("layer {layer} expects input {expected} but the previous layer emits {got}")]
    NotChained { layer: usize, expected: usize, got: usize },
    #[error("layer {layer}: weight has {got} entries, expected {expected}")]
    BadShape { layer: usize, expected: usize, got: usize },
    #[error("a tower needs at least one layer")]
    Empty,
    #[error("non-finite parameter in layer {0}")]
    NonFinite(usize),
    #[error("towers disagree on output dimension ({request} vs {item})")]
    OutputMismatch { request: usize, item: usize },
    #[error("cosine similarity of a zero-norm vector")]
    ZeroNorm,
    #[error("contrastive loss needs at least 2 pairs, got {0}")]
    BatchTooSmall(usize),
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
    #[error("non-finite loss: {0}")]
    NonFiniteLoss(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Embedding(#[from] EmbedError),
}

/// Floating-point types a tower can be instantiated with.
pub trait Scalar: num_traits::Float + std::iter::Sum + std::fmt::Debug + Default + Send + Sync + 'static {
    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn as_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn as_f64(self) -> f64 {
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    fn apply<F: Scalar>(self, x: F) -> F {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(F::zero()),
        }
    }

    /// ReLU has derivative 0 at 0.
    fn derivative<F: Scalar>(self, pre: F) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if pre > F::zero() {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Relu),
            _ => None,
        }
    }
}

/// Fully connected layer; `weight` is row-major `out_dim x in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<F> {
    in_dim: usize,
    out_dim: usize,
    weight: Vec<F>,
    bias: Vec<F>,
    activation: Activation,
}

impl<F: Scalar> Dense<F> {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        weight: Vec<F>,
        bias: Vec<F>,
        activation: Activation,
    ) -> Result<Self, TowerError> {
        if weight.len() != in_dim * out_dim {
            return Err(TowerError::BadShape {
                layer: 0,
                expected: in_dim * out_dim,
                got: weight.len(),
            });
        }
        if bias.len() != out_dim {
            return Err(TowerError::BadShape {
                layer: 0,
                expected: out_dim,
                got: bias.len(),
            });
        }
        Ok(Self {
            in_dim,
            out_dim,
            weight,
            bias,
            activation,
        })
    }

    /// Identity weight, zero bias, linear activation.
    pub fn identity(dim: usize) -> Self {
        let mut weight = vec![F::zero(); dim * dim];
        for i in 0..dim {
            weight[i * dim + i] = F::one();
        }
        Self {
            in_dim: dim,
            out_dim: dim,
            weight,
            bias: vec![F::zero(); dim],
            activation: Activation::Identity,
        }
    }

    fn init(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        // He-uniform for ReLU layers, Glorot-uniform for the linear head.
        let limit = match activation {
            Activation::Relu => (6.0 / in_dim as f64).sqrt(),
            Activation::Identity => (6.0 / (in_dim + out_dim) as f64).sqrt(),
        };
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
        Self {
            in_dim,
            out_dim,
            weight: (0..in_dim * out_dim).map(|_| F::from_f64(dist.sample(rng))).collect(),
            bias: vec![F::zero(); out_dim],
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weight(&self) -> &[F] {
        &self.weight
    }

    pub fn bias(&self) -> &[F] {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn pre_activation(&self, x: &[F]) -> Vec<F> {
        self.weight
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, &b)| row.iter().zip(x).fold(b, |acc, (&w, &xi)| acc + w * xi))
            .collect()
    }

    fn cast<G: Scalar>(&self) -> Dense<G> {
        Dense {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            weight: self.weight.iter().map(|w| G::from_f64(w.as_f64())).collect(),
            bias: self.bias.iter().map(|b| G::from_f64(b.as_f64())).collect(),
            activation: self.activation,
        }
    }
}

/// Shape of a tower: hidden widths (all with one activation) and a linear head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TowerSpec {
    pub hidden: Vec<usize>,
    pub out_dim: usize,
    pub activation: Activation,
}

impl Default for TowerSpec {
    fn default() -> Self {
        Self {
            hidden: vec![256, 256],
            out_dim: 128,
            activation: Activation::Relu,
        }
    }
}

/// Cached per-layer inputs and pre-activations of one forward pass.
pub(crate) struct Trace<F> {
    inputs: Vec<Vec<F>>,
    pre: Vec<Vec<F>>,
    pub(crate) output: Vec<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tower<F> {
    layers: Vec<Dense<F>>,
}

impl<F: Scalar> Tower<F> {
    pub fn new(layers: Vec<Dense<F>>) -> Result<Self, TowerError> {
        if layers.is_empty() {
            return Err(TowerError::Empty);
        }
        for (n, pair) in layers.windows(2).enumerate() {
            if pair[1].in_dim != pair[0].out_dim {
                return Err(TowerError::NotChained {
                    layer: n + 1,
                    expected: pair[1].in_dim,
                    got: pair[0].out_dim,
                });
            }
        }
        for (n, l) in layers.iter().enumerate() {
            if l.weight.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(TowerError::NonFinite(n));
            }
        }
        Ok(Self { layers })
    }

    pub fn init(in_dim: usize, spec: &TowerSpec, rng: &mut impl Rng) -> Self {
        let mut layers = Vec::with_capacity(spec.hidden.len() + 1);
        let mut prev = in_dim;
        for &w in &spec.hidden {
            layers.push(Dense::init(prev, w, spec.activation, rng));
            prev = w;
        }
        layers.push(Dense::init(prev, spec.out_dim, Activation::Identity, rng));
        Self { layers }
    }

    pub fn layers(&self) -> &[Dense<F>] {
        &self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, x: &[F]) -> Result<Vec<F>, TowerError> {
        self.check_input(x)?;
        let mut a = x.to_vec();
        for l in &self.layers {
            a = l
                .pre_activation(&a)
                .into_iter()
                .map(|z| l.activation.apply(z))
                .collect();
        }
        Ok(a)
    }

    fn check_input(&self, x: &[F]) -> Result<(), TowerError> {
        if x.len() != self.in_dim() {
            return Err(TowerError::DimensionMismatch {
                expected: self.in_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn forward_trace(&self, x: &[F]) -> Result<Trace<F>, TowerError> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.to_vec();
        for l in &self.layers {
            let z = l.pre_activation(&a);
            let next = z.iter().map(|&v| l.activation.apply(v)).collect();
            inputs.push(std::mem::replace(&mut a, next));
            pre.push(z);
        }
        Ok(Trace { inputs, pre, output: a })
    }

    /// Accumulates parameter gradients for one example given dLoss/dOutput.
    pub(crate) fn backward(&self, trace: &Trace<F>, d_out: &[f64], grads: &mut TowerGrads) {
        let mut d_a = d_out.to_vec();
        for (n, l) in self.layers.iter().enumerate().rev() {
            let g = &mut grads.layers[n];
            let x = &trace.inputs[n];
            let dz: Vec<f64> = d_a
                .iter()
                .zip(&trace.pre[n])
                .map(|(&d, &z)| d * l.activation.derivative(z))
                .collect();
            let mut d_prev = if n > 0 { vec![0.0f64; l.in_dim] } else { Vec::new() };
            for (o, &dzo) in dz.iter().enumerate() {
                if dzo == 0.0 {
                    continue;
                }
                g.bias[o] += dzo;
                let row = &l.weight[o * l.in_dim..(o + 1) * l.in_dim];
                let grow = &mut g.weight[o * l.in_dim..(o + 1) * l.in_dim];
                for (gw, &xi) in grow.iter_mut().zip(x) {
                    *gw += dzo * xi.as_f64();
                }
                if n > 0 {
                    for (dp, &w) in d_prev.iter_mut().zip(row) {
                        *dp += dzo * w.as_f64();
                    }
                }
            }
            d_a = d_prev;
        }
    }

    /// Weights then bias of each layer, in layer order.
    pub fn params(&self) -> impl Iterator<Item = &F> {
        self.layers.iter().flat_map(|l| l.weight.iter().chain(&l.bias))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut F> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn cast<G: Scalar>(&self) -> Tower<G> {
        Tower {
            layers: self.layers.iter().map(Dense::cast).collect(),
        }
    }
}

/// Request tower and item tower with a shared output dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoTower<F> {
    request: Tower<F>,
    item: Tower<F>,
}

impl<F: Scalar> TwoTower<F> {
    pub fn new(request: Tower<F>, item: Tower<F>) -> Result<Self, TowerError> {
        if request.out_dim() != item.out_dim() {
            return Err(TowerError::OutputMismatch {
                request: request.out_dim(),
                item: item.out_dim(),
            });
        }
        Ok(Self { request, item })
    }

    /// Seeded initialization; both towers share `spec`.
    pub fn init(in_dim: usize, spec: &TowerSpec, seed: u64) -> Self {
        let request = Tower::init(in_dim, spec, &mut keyed_rng(seed, "init/request-tower"));
        let item = Tower::init(in_dim, spec, &mut keyed_rng(seed, "init/item-tower"));
        Self { request, item }
    }

    pub fn request_tower(&self) -> &Tower<F> {
        &self.request
    }

    pub fn item_tower(&self) -> &Tower<F> {
        &self.item
    }

    pub fn in_dim(&self) -> usize {
        self.request.in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.request.out_dim()
    }

    pub fn param_count(&self) -> usize {
        self.request.param_count() + self.item.param_count()
    }

    pub fn project_request(&self, v: &[F]) -> Result<Vec<F>, TowerError> {
        self.request.forward(v)
    }

    pub fn project_item(&self, v: &[F]) -> Result<Vec<F>, TowerError> {
        self.item.forward(v)
    }

    /// Dot-product relevance of a (request, item) pair of base embeddings.
    pub fn score(&self, request: &[F], item: &[F]) -> Result<f64, TowerError> {
        score(&self.project_request(request)?, &self.project_item(item)?)
    }

    /// Request-tower parameters followed by item-tower parameters.
    pub fn params(&self) -> impl Iterator<Item = &F> {
        self.request.params().chain(self.item.params())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut F> {
        self.request.params_mut().chain(self.item.params_mut())
    }

    pub fn cast<G: Scalar>(&self) -> TwoTower<G> {
        TwoTower {
            request: self.request.cast(),
            item: self.item.cast(),
        }
    }
}
