//! Wall time of one assimilation (analysis) step versus problem size.
//!
//! The forecast ensemble is the truth plus unit Gaussian noise per member,
//! so the timed work is exactly one analysis at the configured ensemble
//! size and, for EnSF, pseudo-step count.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, MethodConfig};
use crate::ensemble::Ensemble;
use crate::ensf::analyze;
use crate::error::{Error, Result};
use crate::ldyn::{init_true_state, observe, Lorenz96Params};
use crate::letkf::letkf_analysis;
use crate::rng::{fill_standard_normal, role_stream, stream, Role};

/// Largest dimension timed unless explicitly raised.
pub const DEFAULT_MAX_DIM: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub method: String,
    pub dim: usize,
    pub ensemble_size: usize,
    /// Pseudo-time steps for EnSF; 0 for LETKF.
    pub pseudo_steps: usize,
    /// EnSF mini-batch size, or LETKF local region size.
    pub local_size: usize,
    pub repetitions: usize,
    pub mean_seconds: f64,
    pub min_seconds: f64,
    pub max_seconds: f64,
}

/// Time `repetitions` analyses of a `dim`-dimensional problem.
pub fn time_assimilation_step(template: &ExperimentConfig, dim: usize, repetitions: usize) -> Result<ScalingRow> {
    if repetitions == 0 {
        return Err(Error::InvalidConfig("scaling repetitions must be at least 1".into()));
    }
    let mut cfg = template.clone();
    cfg.model = Lorenz96Params { dim, ..template.model.clone() };
    cfg.validate()?;
    let seed = cfg.run.master_seed;
    let j = cfg.method.ensemble_size();
    let truth = init_true_state(&cfg.model, &mut role_stream(seed, 0, Role::Truth))?;
    let y = observe(&truth, &cfg.observation, &mut role_stream(seed, 0, Role::ObsNoise))?;
    let mut forecast = Ensemble::zeros(j, dim);
    let mut rng = role_stream(seed, 0, Role::Filter);
    for row in forecast.rows_mut() {
        fill_standard_normal(&mut rng, row);
        row.iter_mut().zip(&truth).for_each(|(v, t)| *v += t);
    }

    let mut times = Vec::with_capacity(repetitions);
    for rep in 0..repetitions {
        let mut rng = stream(seed, &[rep as u64, Role::Filter as u64, dim as u64]);
        let start = Instant::now();
        let out = match &cfg.method {
            MethodConfig::Ensf(s) => analyze(&forecast, &y, &cfg.observation, &s.to_config()?, &mut rng)?,
            MethodConfig::Letkf(s) => letkf_analysis(&forecast, &y, &cfg.observation, &s.to_config())?.ensemble,
        };
        times.push(start.elapsed().as_secs_f64());
        std::hint::black_box(out);
    }
    let (pseudo_steps, local_size) = match &cfg.method {
        MethodConfig::Ensf(s) => (s.pseudo_steps, s.batch_size),
        MethodConfig::Letkf(s) => (0, s.to_config().neighbor_size(dim)),
    };
    Ok(ScalingRow {
        method: cfg.method.kind().to_string(),
        dim,
        ensemble_size: j,
        pseudo_steps,
        local_size,
        repetitions,
        mean_seconds: times.iter().sum::<f64>() / repetitions as f64,
        min_seconds: times.iter().copied().fold(f64::INFINITY, f64::min),
        max_seconds: times.iter().copied().fold(0.0, f64::max),
    })
}

/// One row per dimension; `dims` must be strictly ascending and at most
/// `max_dim`.
pub fn run_scaling(dims: &[usize], template: &ExperimentConfig, repetitions: usize, max_dim: usize) -> Result<Vec<ScalingRow>> {
    let mut v = Vec::new();
    if dims.is_empty() {
        v.push("scaling needs at least one dimension".to_string());
    }
    if dims.windows(2).any(|w| w[1] <= w[0]) {
        v.push(format!("scaling dimensions must be strictly ascending (got {dims:?})"));
    }
    if let Some(&d) = dims.iter().find(|&&d| d > max_dim) {
        v.push(format!("scaling dimension {d} exceeds the limit {max_dim}; raise the limit explicitly"));
    }
    if !v.is_empty() {
        return Err(Error::Validation(v));
    }
    dims.iter().map(|&d| time_assimilation_step(template, d, repetitions)).collect()
}
