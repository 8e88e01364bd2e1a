//! Scalar losses and similarity functions. All results are `f64`.

use super::{Scalar, TowerError};
use crate::corpus::Label;

/// Probability clamp applied before binary cross entropy.
pub const BCE_EPS: f64 = 1e-7;

fn check_len(a: usize, b: usize) -> Result<(), TowerError> {
    if a != b {
        return Err(TowerError::DimensionMismatch { expected: a, got: b });
    }
    Ok(())
}

pub(crate) fn dot<F: Scalar>(u: &[F], v: &[F]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a.as_f64() * b.as_f64()).sum()
}

pub(crate) fn norm<F: Scalar>(u: &[F]) -> f64 {
    dot(u, u).sqrt()
}

/// Dot product.
pub fn score<F: Scalar>(u: &[F], v: &[F]) -> Result<f64, TowerError> {
    check_len(u.len(), v.len())?;
    Ok(dot(u, v))
}

pub fn cosine_similarity<F: Scalar>(u: &[F], v: &[F]) -> Result<f64, TowerError> {
    check_len(u.len(), v.len())?;
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(TowerError::ZeroNorm);
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// `1 - cos` for positives, `max(0, cos)` for negatives (margin 0).
pub fn cosine_embedding_loss<F: Scalar>(x1: &[F], x2: &[F], y: Label) -> Result<f64, TowerError> {
    let c = cosine_similarity(x1, x2)?;
    Ok(match y {
        Label::Positive => 1.0 - c,
        Label::Negative => c.max(0.0),
    })
}

pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Score to probability: logistic sigmoid clamped to `[eps, 1 - eps]`.
pub fn predict_prob(s: f64) -> f64 {
    sigmoid(s).clamp(BCE_EPS, 1.0 - BCE_EPS)
}

/// Binary cross entropy for a `{0, 1}` target; `y_hat` is clamped first.
pub fn bce_loss(y_hat: f64, target: f64) -> f64 {
    let p = y_hat.clamp(BCE_EPS, 1.0 - BCE_EPS);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

/// In-batch InfoNCE over a row-major `b x b` score matrix (diagonal = matched
/// pairs) together with its gradient with respect to each score.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoNce {
    pub loss: f64,
    pub grad: Vec<f64>,
}

/// `excluded[i * b + j]` removes column `j` from row `i`'s softmax; the
/// diagonal is never excluded.
pub fn info_nce(scores: &[f64], b: usize, temperature: f64, excluded: Option<&[bool]>) -> Result<InfoNce, TowerError> {
    if b < 2 {
        return Err(TowerError::BatchTooSmall(b));
    }
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(TowerError::BadTemperature(temperature));
    }
    check_len(b * b, scores.len())?;
    let skip = |i: usize, j: usize| i != j && excluded.is_some_and(|m| m[i * b + j]);

    let mut loss = 0.0;
    let mut grad = vec![0.0; b * b];
    for i in 0..b {
        let row = &scores[i * b..(i + 1) * b];
        let max = (0..b)
            .filter(|&j| !skip(i, j))
            .map(|j| row[j] / temperature)
            .fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = (0..b)
            .filter(|&j| !skip(i, j))
            .map(|j| (row[j] / temperature - max).exp())
            .sum();
        let lse = max + denom.ln();
        loss += lse - row[i] / temperature;
        for j in (0..b).filter(|&j| !skip(i, j)) {
            let p = (row[j] / temperature - lse).exp();
            let target = if i == j { 1.0 } else { 0.0 };
            grad[i * b + j] = (p - target) / (b as f64 * temperature);
        }
    }
    let loss = loss / b as f64;
    if !loss.is_finite() {
        return Err(TowerError::NonFiniteLoss(format!("InfoNCE over {b} pairs")));
    }
    Ok(InfoNce { loss, grad })
}

/// InfoNCE over matched (request output, item output) pairs.
pub fn contrastive_loss<F: Scalar>(requests: &[&[F]], items: &[&[F]], temperature: f64) -> Result<f64, TowerError> {
    check_len(requests.len(), items.len())?;
    let b = requests.len();
    let mut scores = Vec::with_capacity(b * b);
    for u in requests {
        for v in items {
            scores.push(score(u, v)?);
        }
    }
    Ok(info_nce(&scores, b, temperature, None)?.loss)
}
