//! RMSE, ensemble spread and CRPS.

use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordKind {
    Assimilation,
    PredictionOnly,
}

impl RecordKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Assimilation => "assimilation",
            RecordKind::PredictionOnly => "prediction-only",
        }
    }
}

/// One row of a metric time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub method: String,
    pub repetition: usize,
    pub time_index: usize,
    pub kind: RecordKind,
    pub rmse: f64,
    pub spread: f64,
    pub crps: Option<f64>,
    pub shock_flag: bool,
}

/// Root mean square difference over components.
pub fn rmse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), actual: estimate.len() });
    }
    if truth.is_empty() {
        return Ok(0.0);
    }
    let sq: f64 = estimate.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sq / truth.len() as f64).sqrt())
}

/// `sqrt(mean_i Var_i)` with the unbiased (J-1) variance per component.
pub fn ensemble_spread(ensemble: &Ensemble) -> Result<f64> {
    let j = ensemble.members();
    if j < 2 {
        return Err(Error::InsufficientEnsemble { members: j, required: 2 });
    }
    let d = ensemble.dim();
    if d == 0 {
        return Ok(0.0);
    }
    let mean = ensemble.mean();
    let mut total = 0.0;
    for row in ensemble.rows() {
        for (x, m) in row.iter().zip(&mean) {
            total += (x - m) * (x - m);
        }
    }
    Ok((total / ((j - 1) as f64 * d as f64)).sqrt())
}

/// CRPS of an ensemble against a scalar truth:
/// `(1/J) Σ_j |x_j - y| - (1/2J²) Σ_{j,k} |x_j - x_k|`.
///
/// `sorted` must be sorted ascending. The pair sum uses the order-statistic
/// identity `Σ_{j<k} (x_(k) - x_(j)) = Σ_k (2k - J - 1) x_(k)` (1-based k).
fn crps_scalar(sorted: &[f64], truth: f64) -> f64 {
    let j = sorted.len() as f64;
    let abs_err: f64 = sorted.iter().map(|x| (x - truth).abs()).sum::<f64>() / j;
    let pair: f64 = sorted
        .iter()
        .enumerate()
        .map(|(k, x)| (2.0 * (k as f64 + 1.0) - j - 1.0) * x)
        .sum();
    // Σ_{j,k} |x_j - x_k| = 2 Σ_{j<k} (...)
    abs_err - pair / (j * j)
}

/// Component-averaged CRPS of the empirical ensemble CDF against the truth.
pub fn crps(ensemble: &Ensemble, truth: &[f64]) -> Result<f64> {
    let (j, d) = (ensemble.members(), ensemble.dim());
    if j == 0 {
        return Err(Error::InsufficientEnsemble { members: 0, required: 1 });
    }
    if truth.len() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: truth.len() });
    }
    if d == 0 {
        return Ok(0.0);
    }
    let mut column = vec![0.0; j];
    let mut total = 0.0;
    for i in 0..d {
        for (c, row) in column.iter_mut().zip(ensemble.rows()) {
            *c = row[i];
        }
        column.sort_unstable_by(f64::total_cmp);
        total += crps_scalar(&column, truth[i]);
    }
    Ok((total / d as f64).max(0.0))
}
