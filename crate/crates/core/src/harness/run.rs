//! Seeded twin experiments.
//!
//! Each repetition owns four streams derived from
//! `(master_seed, repetition, role)`: the truth initial condition, the
//! observation noise, the shocks and the filter (initial ensemble plus all
//! analysis randomness). Truth and observations therefore depend only on the
//! seed, the model, the observation model and the shock model, never on the
//! filter, so different methods see identical data.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{hex, AggregationWindow, ExperimentConfig, MethodConfig};
use crate::ensemble::Ensemble;
use crate::ensf::{analyze, EnsfConfig};
use crate::error::{Error, Result};
use crate::ldyn::{apply_shocks_in_place, init_true_state, observe, ForecastModel, StepWorkspace};
use crate::letkf::{letkf_analysis, LetkfConfig};
use crate::metrics::{crps, ensemble_spread, rmse, MetricsRecord, RecordKind};
use crate::rng::{role_stream, Role, Stream};

pub const VERSION: &str = concat!("ensf-core ", env!("CARGO_PKG_VERSION"));

/// Numerical failure of one repetition. Remaining rows of that repetition
/// carry NaN metrics; the truth is still integrated to the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub time_index: usize,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionStatus {
    pub repetition: usize,
    pub divergence: Option<Divergence>,
    /// Assimilation times at which at least one shock fired.
    pub shock_times: Vec<usize>,
    pub floored_eigenvalues: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub label: String,
    pub method: String,
    pub config_digest: String,
    pub master_seed: u64,
    pub version: String,
    /// SHA-256 over every truth state of every repetition.
    pub truth_digest: String,
    pub repetitions: Vec<RepetitionStatus>,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub repetition: usize,
    pub time_index: usize,
    pub truth: Vec<f64>,
    pub estimate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    /// Repetition-major, then time.
    pub records: Vec<MetricsRecord>,
    pub metadata: RunMetadata,
    pub snapshots: Vec<Snapshot>,
}

impl RunOutput {
    pub fn any_divergence(&self) -> bool {
        self.metadata.repetitions.iter().any(|r| r.divergence.is_some())
    }

    /// Mean over repetitions of the window-averaged assimilation RMSE.
    pub fn aggregate_rmse(&self, window: AggregationWindow) -> f64 {
        aggregate_rmse(&self.records, self.config.run.repetitions, window)
    }

    /// Per-time RMSE averaged over repetitions, restricted to `kind` if given.
    pub fn mean_series(&self, kind: Option<RecordKind>) -> Vec<(usize, f64)> {
        mean_series(&self.records, kind)
    }
}

pub fn aggregate_rmse(records: &[MetricsRecord], repetitions: usize, window: AggregationWindow) -> f64 {
    let mut total = 0.0;
    for rep in 0..repetitions {
        let series: Vec<f64> = records
            .iter()
            .filter(|r| r.repetition == rep && r.kind == RecordKind::Assimilation)
            .map(|r| r.rmse)
            .collect();
        let tail = match window {
            AggregationWindow::AllAssimilationTimes => &series[..],
            AggregationWindow::Last50 => &series[series.len().saturating_sub(50)..],
        };
        if tail.is_empty() {
            return f64::NAN;
        }
        total += tail.iter().sum::<f64>() / tail.len() as f64;
    }
    total / repetitions as f64
}

pub fn mean_series(records: &[MetricsRecord], kind: Option<RecordKind>) -> Vec<(usize, f64)> {
    let mut acc: std::collections::BTreeMap<usize, (f64, usize)> = Default::default();
    for r in records.iter().filter(|r| kind.is_none_or(|k| r.kind == k)) {
        let e = acc.entry(r.time_index).or_insert((0.0, 0));
        e.0 += r.rmse;
        e.1 += 1;
    }
    acc.into_iter().map(|(t, (s, n))| (t, s / n as f64)).collect()
}

enum Filter {
    Ensf(EnsfConfig),
    Letkf(LetkfConfig),
    /// No analysis: the initial ensemble is only propagated.
    FreeRun,
}

impl Filter {
    fn from_method(m: &MethodConfig) -> Result<Self> {
        Ok(match m {
            MethodConfig::Ensf(s) => Filter::Ensf(s.to_config()?),
            MethodConfig::Letkf(s) => Filter::Letkf(s.to_config()),
        })
    }

    fn update(
        &self,
        forecast: Ensemble,
        y: &[f64],
        cfg: &ExperimentConfig,
        rng: &mut Stream,
        floored: &mut usize,
    ) -> Result<Ensemble> {
        match self {
            Filter::Ensf(c) => analyze(&forecast, y, &cfg.observation, c, rng),
            Filter::Letkf(c) => {
                let a = letkf_analysis(&forecast, y, &cfg.observation, c)?;
                *floored += a.floored_eigenvalues;
                Ok(a.ensemble)
            }
            Filter::FreeRun => Ok(forecast),
        }
    }
}

struct RepetitionResult {
    records: Vec<MetricsRecord>,
    status: RepetitionStatus,
    snapshots: Vec<Snapshot>,
    truth_digest: [u8; 32],
}

fn record(
    label: &str,
    rep: usize,
    t: usize,
    kind: RecordKind,
    ens: Option<&Ensemble>,
    truth: &[f64],
    shock_flag: bool,
) -> Result<MetricsRecord> {
    let (rmse, spread, crps) = match ens {
        Some(e) => (rmse(&e.mean(), truth)?, ensemble_spread(e)?, Some(crps(e, truth)?)),
        None => (f64::NAN, f64::NAN, None),
    };
    Ok(MetricsRecord { method: label.to_string(), repetition: rep, time_index: t, kind, rmse, spread, crps, shock_flag })
}

fn run_repetition(cfg: &ExperimentConfig, filter: &Filter, label: &str, rep: usize) -> Result<RepetitionResult> {
    let seed = cfg.run.master_seed;
    let model = &cfg.model;
    let every = cfg.run.steps_between_assimilation;
    let stride = cfg.run.snapshot_stride;
    let mut truth_rng = role_stream(seed, rep as u64, Role::Truth);
    let mut obs_rng = role_stream(seed, rep as u64, Role::ObsNoise);
    let mut shock_rng = role_stream(seed, rep as u64, Role::Shocks);
    let mut filter_rng = role_stream(seed, rep as u64, Role::Filter);

    let mut truth = init_true_state(model, &mut truth_rng)?;
    let mut ens = Some(Ensemble::standard_normal(cfg.method.ensemble_size(), model.dim, &mut filter_rng));
    let mut work = StepWorkspace::new(model.dim);
    let mut hasher = Sha256::new();
    let hash_state = |h: &mut Sha256, x: &[f64]| x.iter().for_each(|v| h.update(v.to_le_bytes()));
    hash_state(&mut hasher, &truth);

    let mut status = RepetitionStatus { repetition: rep, divergence: None, shock_times: Vec::new(), floored_eigenvalues: 0 };
    let mut records = Vec::with_capacity(cfg.run.total_steps + 1);
    let mut snapshots = Vec::new();
    let snap = |snapshots: &mut Vec<Snapshot>, t: usize, truth: &[f64], ens: &Option<Ensemble>| {
        if stride > 0 && t.is_multiple_of(stride) {
            let estimate = ens.as_ref().map_or_else(|| vec![f64::NAN; truth.len()], Ensemble::mean);
            snapshots.push(Snapshot { repetition: rep, time_index: t, truth: truth.to_vec(), estimate });
        }
    };

    records.push(record(label, rep, 0, RecordKind::PredictionOnly, ens.as_ref(), &truth, false)?);
    snap(&mut snapshots, 0, &truth, &ens);

    for t in 1..=cfg.run.total_steps {
        model.step(&mut truth, &mut work)?;
        if let Some(e) = ens.as_mut() {
            if let Err(err) = e.propagate(model, 1) {
                status.divergence = Some(divergence(t, &err));
                ens = None;
            }
        }
        let assimilate = t % every == 0;
        let mut shock_flag = false;
        if assimilate {
            if let Some(shocks) = &cfg.shock {
                let fired = apply_shocks_in_place(&mut truth, shocks, model.clip_bound, &mut shock_rng);
                if !fired.is_empty() {
                    shock_flag = true;
                    status.shock_times.push(t);
                }
            }
            let y = observe(&truth, &cfg.observation, &mut obs_rng)?;
            if let Some(forecast) = ens.take() {
                match filter.update(forecast, &y, cfg, &mut filter_rng, &mut status.floored_eigenvalues) {
                    Ok(a) if a.is_finite() => ens = Some(a),
                    Ok(_) => status.divergence = Some(divergence(t, &Error::NumericalOverflow("analysis"))),
                    Err(err @ (Error::SamplerDivergence { .. } | Error::NumericalOverflow(_) | Error::NonFinite(_))) => {
                        status.divergence = Some(divergence(t, &err))
                    }
                    Err(err) => return Err(err),
                }
            }
        }
        hash_state(&mut hasher, &truth);
        let kind = if assimilate { RecordKind::Assimilation } else { RecordKind::PredictionOnly };
        records.push(record(label, rep, t, kind, ens.as_ref(), &truth, shock_flag)?);
        snap(&mut snapshots, t, &truth, &ens);
    }
    Ok(RepetitionResult { records, status, snapshots, truth_digest: hasher.finalize().into() })
}

fn divergence(t: usize, err: &Error) -> Divergence {
    Divergence { time_index: t, kind: err.kind().to_string(), message: err.to_string() }
}

fn run_with(cfg: &ExperimentConfig, filter: Filter, label: String) -> Result<RunOutput> {
    let start = Instant::now();
    let results: Vec<RepetitionResult> = (0..cfg.run.repetitions)
        .into_par_iter()
        .map(|rep| run_repetition(cfg, &filter, &label, rep))
        .collect::<Result<_>>()?;
    let mut truth = Sha256::new();
    let mut records = Vec::with_capacity(results.len() * (cfg.run.total_steps + 1));
    let mut repetitions = Vec::with_capacity(results.len());
    let mut snapshots = Vec::new();
    for r in results {
        truth.update(r.truth_digest);
        records.extend(r.records);
        repetitions.push(r.status);
        snapshots.extend(r.snapshots);
    }
    let metadata = RunMetadata {
        label,
        method: match filter {
            Filter::FreeRun => "free-run".to_string(),
            _ => cfg.method.kind().to_string(),
        },
        config_digest: cfg.digest(),
        master_seed: cfg.run.master_seed,
        version: VERSION.to_string(),
        truth_digest: hex(&truth.finalize()),
        repetitions,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutput { config: cfg.clone(), records, metadata, snapshots })
}

/// Run every repetition of a twin experiment with the configured filter.
/// Numerical divergence of a repetition is recorded in the metadata and does
/// not stop the other repetitions.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    run_with(cfg, Filter::from_method(&cfg.method)?, cfg.label())
}

/// The same experiment with the analysis step skipped: the initial ensemble
/// is only propagated. Truth and observations match [`run_experiment`].
pub fn run_free_forecast(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    run_with(cfg, Filter::FreeRun, "free-run".to_string())
}
