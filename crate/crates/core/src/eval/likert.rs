use serde::{Deserialize, Serialize};

use super::EvalError;

/// Ratings 1 and 2 are negative, 3 neutral, 4 and 5 positive.
pub fn likert_value(rating: i64) -> Result<i8, EvalError> {
    match rating {
        1 | 2 => Ok(-1),
        3 => Ok(0),
        4 | 5 => Ok(1),
        r => Err(EvalError::RatingOutOfRange(r)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikertSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation of the mapped values; 0 for a single rating.
    pub sd: f64,
}

pub fn aggregate_likert(ratings: impl IntoIterator<Item = i64>) -> Result<LikertSummary, EvalError> {
    let values = ratings
        .into_iter()
        .map(|r| likert_value(r).map(f64::from))
        .collect::<Result<Vec<f64>, _>>()?;
    if values.is_empty() {
        return Err(EvalError::EmptyBatch);
    }
    let n = values.len();
    let mean = (values.iter().sum::<f64>() / n as f64).clamp(-1.0, 1.0);
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(LikertSummary { n, mean, sd })
}
