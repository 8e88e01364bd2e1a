use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{hits, ndcg, EvalError, RelevanceJudgment};
use crate::rank::RankedList;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Mean of per-request values.
    #[default]
    Macro,
    /// Pooled hit counts for precision and recall; NDCG stays per-request.
    Micro,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsAtK {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestMetrics {
    pub request_id: String,
    pub ranked: usize,
    pub relevant: usize,
    /// Aligned with the report's k set.
    pub precision: Vec<f64>,
    /// `None` for requests without relevant items, which are left out of
    /// every average.
    pub recall: Option<Vec<f64>>,
    pub ndcg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub averaging: Averaging,
    pub n_requests: usize,
    /// Requests skipped for having an empty relevant set.
    pub excluded_requests: usize,
    /// Requests whose ranking held fewer items than the largest k.
    pub short_rankings: usize,
    pub at_k: Vec<MetricsAtK>,
    pub ndcg: f64,
    pub per_request: Vec<RequestMetrics>,
}

impl EvalReport {
    pub fn k_set(&self) -> Vec<usize> {
        self.at_k.iter().map(|m| m.k).collect()
    }

    pub fn precision(&self, k: usize) -> Option<f64> {
        self.at_k.iter().find(|m| m.k == k).map(|m| m.precision)
    }

    pub fn recall(&self, k: usize) -> Option<f64> {
        self.at_k.iter().find(|m| m.k == k).map(|m| m.recall)
    }
}

/// Scores every ranking against its judgment. Averages are summed in input
/// order, so a fixed input gives bit-identical output.
pub fn evaluate_run(
    rankings: &[RankedList],
    judgments: &[RelevanceJudgment],
    k_set: &[usize],
    averaging: Averaging,
) -> Result<EvalReport, EvalError> {
    if k_set.is_empty() {
        return Err(EvalError::EmptyKSet);
    }
    if k_set.contains(&0) {
        return Err(EvalError::ZeroK);
    }
    let mut by_id: HashMap<&str, &RelevanceJudgment> = HashMap::with_capacity(judgments.len());
    for j in judgments {
        if by_id.insert(&j.request_id, j).is_some() {
            return Err(EvalError::DuplicateJudgment(j.request_id.clone()));
        }
    }
    let max_k = *k_set.iter().max().expect("nonempty");

    let mut seen = HashSet::with_capacity(rankings.len());
    let mut per_request = Vec::with_capacity(rankings.len());
    let mut hit_sums = vec![0usize; k_set.len()];
    let mut relevant_sum = 0usize;
    let mut precision_sums = vec![0.0; k_set.len()];
    let mut recall_sums = vec![0.0; k_set.len()];
    let mut ndcg_sum = 0.0;
    let mut n = 0usize;
    let mut short = 0usize;
    for r in rankings {
        if !seen.insert(r.request_id.as_str()) {
            return Err(EvalError::DuplicateRanking(r.request_id.clone()));
        }
        let j = by_id
            .get(r.request_id.as_str())
            .ok_or_else(|| EvalError::UnmatchedRequest(r.request_id.clone()))?;
        let h: Vec<usize> = k_set.iter().map(|&k| hits(r, j, k)).collect();
        let precision: Vec<f64> = h.iter().zip(k_set).map(|(&h, &k)| h as f64 / k as f64).collect();
        let rel = j.relevant.len();
        let recall = (rel > 0).then(|| h.iter().map(|&h| h as f64 / rel as f64).collect::<Vec<f64>>());
        let nd = ndcg(r, j);
        if let (Some(rc), Some(nd)) = (&recall, nd) {
            n += 1;
            if r.len() < max_k {
                short += 1;
            }
            for i in 0..k_set.len() {
                hit_sums[i] += h[i];
                precision_sums[i] += precision[i];
                recall_sums[i] += rc[i];
            }
            relevant_sum += rel;
            ndcg_sum += nd;
        }
        per_request.push(RequestMetrics {
            request_id: r.request_id.clone(),
            ranked: r.len(),
            relevant: rel,
            precision,
            recall,
            ndcg: nd,
        });
    }
    if n == 0 {
        return Err(EvalError::NothingToAverage);
    }

    let at_k = k_set
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let (precision, recall) = match averaging {
                Averaging::Macro => (precision_sums[i] / n as f64, recall_sums[i] / n as f64),
                Averaging::Micro => (
                    hit_sums[i] as f64 / (n * k) as f64,
                    hit_sums[i] as f64 / relevant_sum as f64,
                ),
            };
            MetricsAtK { k, precision, recall }
        })
        .collect();
    Ok(EvalReport {
        averaging,
        n_requests: n,
        excluded_requests: rankings.len() - n,
        short_rankings: short,
        at_k,
        ndcg: ndcg_sum / n as f64,
        per_request,
    })
}

/// Plain-text results table: one row per system, precision then recall
/// columns for each k, then NDCG.
pub fn render_table(rows: &[(&str, &EvalReport)]) -> String {
    let Some((_, first)) = rows.first() else {
        return String::new();
    };
    let ks = first.k_set();
    let width = rows
        .iter()
        .map(|(name, _)| name.len())
        .max()
        .unwrap_or(0)
        .max("Model".len());
    let mut out = String::new();
    let _ = write!(out, "{:<width$}", "Model");
    for k in &ks {
        let _ = write!(out, "  {:>7}", format!("PREC@{k}"));
    }
    for k in &ks {
        let _ = write!(out, "  {:>7}", format!("REC@{k}"));
    }
    let _ = writeln!(out, "  {:>7}", "NDCG");
    for (name, r) in rows {
        let _ = write!(out, "{name:<width$}");
        for k in &ks {
            let _ = write!(out, "  {:>7}", fmt_metric(r.precision(*k)));
        }
        for k in &ks {
            let _ = write!(out, "  {:>7}", fmt_metric(r.recall(*k)));
        }
        let _ = writeln!(out, "  {:>7.4}", r.ndcg);
    }
    out
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}
