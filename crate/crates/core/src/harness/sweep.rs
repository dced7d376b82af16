//! Two-parameter hyper-parameter grids.
//!
//! Every cell reuses the base configuration's seed, so all cells see the
//! same truth, observations and filter streams. A cell's value therefore
//! depends only on its own parameters, not on evaluation order or on which
//! other cells are in the grid.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AggregationWindow, SweepConfig};
use super::run::{run_experiment, VERSION};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    /// Index into `values1`.
    pub i: usize,
    /// Index into `values2`.
    pub j: usize,
    pub value1: f64,
    pub value2: f64,
    /// Aggregated RMSE; `None` when it is not finite.
    pub rmse: Option<f64>,
    pub divergent: bool,
    pub diverged_repetitions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub method: String,
    pub parameter1: String,
    pub parameter2: String,
    pub values1: Vec<f64>,
    pub values2: Vec<f64>,
    pub aggregation: AggregationWindow,
    pub divergence_cap: f64,
    /// Row-major over `(i, j)`.
    pub cells: Vec<SweepCell>,
    /// Up to three non-divergent cells with the lowest RMSE, best first.
    pub best: Vec<(usize, usize)>,
    pub config_digest: String,
    pub version: String,
    pub wall_time_seconds: f64,
}

impl SweepOutput {
    pub fn cell(&self, i: usize, j: usize) -> &SweepCell {
        &self.cells[i * self.values2.len() + j]
    }

    pub fn divergent_count(&self) -> usize {
        self.cells.iter().filter(|c| c.divergent).count()
    }
}

/// Lowest-RMSE non-divergent cells, ties broken by position.
pub fn argmin3(cells: &[SweepCell]) -> Vec<(usize, usize)> {
    let mut ok: Vec<&SweepCell> = cells.iter().filter(|c| !c.divergent).collect();
    ok.sort_by(|a, b| a.rmse.unwrap_or(f64::INFINITY).total_cmp(&b.rmse.unwrap_or(f64::INFINITY)).then((a.i, a.j).cmp(&(b.i, b.j))));
    ok.into_iter().take(3).map(|c| (c.i, c.j)).collect()
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let (n1, n2) = (cfg.axis1.values.len(), cfg.axis2.values.len());
    let cap = cfg.base.run.divergence_cap;
    let cells: Vec<SweepCell> = (0..n1 * n2)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n2, k % n2);
            let out = run_experiment(&cfg.cell(i, j)?)?;
            let value = out.aggregate_rmse(cfg.aggregation);
            let diverged_repetitions = out.metadata.repetitions.iter().filter(|r| r.divergence.is_some()).count();
            Ok(SweepCell {
                i,
                j,
                value1: cfg.axis1.values[i],
                value2: cfg.axis2.values[j],
                rmse: value.is_finite().then_some(value),
                divergent: diverged_repetitions > 0 || !value.is_finite() || value > cap,
                diverged_repetitions,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepOutput {
        method: cfg.base.method.kind().to_string(),
        parameter1: cfg.axis1.parameter.clone(),
        parameter2: cfg.axis2.parameter.clone(),
        values1: cfg.axis1.values.clone(),
        values2: cfg.axis2.values.clone(),
        aggregation: cfg.aggregation,
        divergence_cap: cap,
        best: argmin3(&cells),
        cells,
        config_digest: cfg.base.digest(),
        version: VERSION.to_string(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}
