//! Experiment configuration files.
//!
//! TOML is the primary format; JSON with the same structure is accepted when
//! the file name ends in `.json`. A minimal file only needs the model
//! dimension:
//!
//! ```toml
//! [model]
//! dim = 100
//! ```
//!
//! Every other field has a default:
//!
//! | section         | field                      | default           |
//! |-----------------|----------------------------|-------------------|
//! | `[model]`       | `forcing`                  | 8.0               |
//! |                 | `dt`                       | 0.01              |
//! |                 | `damping_term`             | true              |
//! |                 | `clip_bound`               | 50.0              |
//! | `[observation]` | `operator`                 | `"arctan"`        |
//! |                 | `sigma_obs`                | 0.05              |
//! | `[shock]`       | `events`                   | absent (no shocks)|
//! | `[method]`      | `kind`                     | `"ensf"`          |
//! | ensf            | `ensemble_size`            | 20                |
//! |                 | `batch_size`               | 1                 |
//! |                 | `pseudo_steps`             | 500               |
//! |                 | `eps_alpha`                | 0.5               |
//! |                 | `eps_beta`                 | 0.025             |
//! |                 | `damping`                  | `"one-minus-tau"` |
//! |                 | `prediction_noise`         | 0.0               |
//! | letkf           | `ensemble_size`            | 20                |
//! |                 | `inflation`                | 1.1               |
//! |                 | `localization`             | 4.0               |
//! | `[run]`         | `total_steps`              | 1500              |
//! |                 | `steps_between_assimilation` | 10              |
//! |                 | `repetitions`              | 10                |
//! |                 | `master_seed`              | 0                 |
//! |                 | `initial_ensemble`         | `"standard-normal"` |
//! |                 | `divergence_cap`           | 100.0             |
//! |                 | `snapshot_stride`          | 0 (off)           |
//! |                 | `label`                    | method kind       |
//!
//! Unknown fields are rejected everywhere. Sweep files add a `[sweep]`
//! section (see [`SweepSection`]).

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ensf::EnsfConfig;
use crate::error::{Error, Result};
use crate::ldyn::{Lorenz96Params, ObservationModel, ShockModel, MIN_DIMENSION};
use crate::letkf::LetkfConfig;
use crate::score::Damping;
use crate::DiffusionSchedule;

/// Flat, file-facing EnSF settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsfSection {
    pub ensemble_size: usize,
    pub batch_size: usize,
    pub pseudo_steps: usize,
    pub eps_alpha: f64,
    pub eps_beta: f64,
    pub damping: Damping,
    pub prediction_noise: f64,
}

impl Default for EnsfSection {
    fn default() -> Self {
        let d = EnsfConfig::default();
        Self {
            ensemble_size: d.ensemble_size,
            batch_size: d.batch_size,
            pseudo_steps: d.schedule.steps(),
            eps_alpha: d.schedule.eps_alpha(),
            eps_beta: d.schedule.eps_beta(),
            damping: d.damping,
            prediction_noise: d.prediction_noise,
        }
    }
}

impl EnsfSection {
    pub fn to_config(&self) -> Result<EnsfConfig> {
        let cfg = EnsfConfig {
            ensemble_size: self.ensemble_size,
            batch_size: self.batch_size,
            schedule: DiffusionSchedule::new(self.eps_alpha, self.eps_beta, self.pseudo_steps)?,
            damping: self.damping.clone(),
            prediction_noise: self.prediction_noise,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.eps_alpha > 0.0 && self.eps_alpha < 1.0) {
            out.push(format!("method.eps_alpha must lie in (0, 1) (got {})", self.eps_alpha));
        }
        if !(self.eps_beta > 0.0 && self.eps_beta < 1.0) {
            out.push(format!("method.eps_beta must lie in (0, 1) (got {})", self.eps_beta));
        }
        if self.pseudo_steps == 0 {
            out.push("method.pseudo_steps must be at least 1".to_string());
        }
        if self.ensemble_size == 0 {
            out.push("method.ensemble_size must be at least 1".to_string());
        }
        if self.batch_size == 0 || self.batch_size > self.ensemble_size {
            out.push(format!(
                "method.batch_size must lie in 1..=ensemble_size ({}), got {}",
                self.ensemble_size, self.batch_size
            ));
        }
        out.extend(self.damping.violations().into_iter().map(|v| format!("method.{v}")));
        if !(self.prediction_noise >= 0.0 && self.prediction_noise.is_finite()) {
            out.push(format!("method.prediction_noise must be non-negative (got {})", self.prediction_noise));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LetkfSection {
    pub ensemble_size: usize,
    pub inflation: f64,
    pub localization: f64,
}

impl Default for LetkfSection {
    fn default() -> Self {
        let d = LetkfConfig::default();
        Self { ensemble_size: d.ensemble_size, inflation: d.inflation, localization: d.localization }
    }
}

impl LetkfSection {
    pub fn to_config(&self) -> LetkfConfig {
        LetkfConfig {
            ensemble_size: self.ensemble_size,
            inflation: self.inflation,
            localization: self.localization,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MethodConfig {
    Ensf(EnsfSection),
    Letkf(LetkfSection),
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig::Ensf(EnsfSection::default())
    }
}

impl MethodConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            MethodConfig::Ensf(_) => "ensf",
            MethodConfig::Letkf(_) => "letkf",
        }
    }

    pub fn ensemble_size(&self) -> usize {
        match self {
            MethodConfig::Ensf(s) => s.ensemble_size,
            MethodConfig::Letkf(s) => s.ensemble_size,
        }
    }

    /// Names accepted by [`MethodConfig::set_parameter`].
    pub fn parameter_names(&self) -> &'static [&'static str] {
        match self {
            MethodConfig::Ensf(_) => {
                &["eps_alpha", "eps_beta", "pseudo_steps", "ensemble_size", "batch_size", "prediction_noise"]
            }
            MethodConfig::Letkf(_) => &["inflation", "localization", "ensemble_size"],
        }
    }

    /// Set a named numeric hyper-parameter; integer parameters must be given
    /// integral values.
    pub fn set_parameter(&mut self, name: &str, value: f64) -> Result<()> {
        let as_count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidConfig(format!("{name} must be a non-negative integer (got {v})")))
            }
        };
        match (self, name) {
            (MethodConfig::Ensf(s), "eps_alpha") => s.eps_alpha = value,
            (MethodConfig::Ensf(s), "eps_beta") => s.eps_beta = value,
            (MethodConfig::Ensf(s), "pseudo_steps") => s.pseudo_steps = as_count(value)?,
            (MethodConfig::Ensf(s), "ensemble_size") => s.ensemble_size = as_count(value)?,
            (MethodConfig::Ensf(s), "batch_size") => s.batch_size = as_count(value)?,
            (MethodConfig::Ensf(s), "prediction_noise") => s.prediction_noise = value,
            (MethodConfig::Letkf(s), "inflation") => s.inflation = value,
            (MethodConfig::Letkf(s), "localization") => s.localization = value,
            (MethodConfig::Letkf(s), "ensemble_size") => s.ensemble_size = as_count(value)?,
            (m, _) => {
                return Err(Error::InvalidConfig(format!(
                    "parameter '{name}' does not exist on method '{}' (expected one of: {})",
                    m.kind(),
                    m.parameter_names().join(", ")
                )))
            }
        }
        Ok(())
    }

    fn violations(&self) -> Vec<String> {
        match self {
            MethodConfig::Ensf(s) => s.violations(),
            MethodConfig::Letkf(s) => s
                .to_config()
                .violations()
                .into_iter()
                .map(|v| v.replacen("letkf.", "method.", 1))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialEnsemble {
    /// i.i.d. `N(0, I_d)` members.
    #[default]
    StandardNormal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSettings {
    pub total_steps: usize,
    pub steps_between_assimilation: usize,
    pub repetitions: usize,
    pub master_seed: u64,
    pub initial_ensemble: InitialEnsemble,
    /// Aggregated RMSE above this value marks a run or sweep cell divergent.
    pub divergence_cap: f64,
    /// Record truth and ensemble-mean snapshots every this many model
    /// steps; 0 disables snapshots.
    pub snapshot_stride: usize,
    /// Method label used in output rows; defaults to the method kind.
    pub label: Option<String>,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            total_steps: 1500,
            steps_between_assimilation: 10,
            repetitions: 10,
            master_seed: 0,
            initial_ensemble: InitialEnsemble::StandardNormal,
            divergence_cap: 100.0,
            snapshot_stride: 0,
            label: None,
        }
    }
}

impl RunSettings {
    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.steps_between_assimilation == 0 {
            out.push("run.steps_between_assimilation must be at least 1".to_string());
        } else if !self.total_steps.is_multiple_of(self.steps_between_assimilation) {
            out.push(format!(
                "run.total_steps ({}) must be divisible by run.steps_between_assimilation ({})",
                self.total_steps, self.steps_between_assimilation
            ));
        }
        if self.total_steps == 0 {
            out.push("run.total_steps must be at least 1".to_string());
        }
        if self.repetitions == 0 {
            out.push("run.repetitions must be at least 1".to_string());
        }
        if !(self.divergence_cap > 0.0) {
            out.push(format!("run.divergence_cap must be positive (got {})", self.divergence_cap));
        }
        out
    }
}

/// A fully validated twin-experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Lorenz96Params,
    #[serde(default)]
    pub observation: ObservationModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shock: Option<ShockModel>,
    #[serde(default)]
    pub method: MethodConfig,
    #[serde(default)]
    pub run: RunSettings,
}

impl ExperimentConfig {
    /// Default configuration for a `dim`-dimensional Lorenz-96 problem.
    pub fn standard(dim: usize) -> Self {
        Self {
            model: Lorenz96Params::standard(dim),
            observation: ObservationModel::default(),
            shock: None,
            method: MethodConfig::default(),
            run: RunSettings::default(),
        }
    }

    pub fn label(&self) -> String {
        self.run.label.clone().unwrap_or_else(|| self.method.kind().to_string())
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = self.model.violations();
        out.extend(self.observation.violations().into_iter().map(|v| prefix("observation", v)));
        if let Some(s) = &self.shock {
            out.extend(s.violations());
        }
        out.extend(self.method.violations());
        if self.method.ensemble_size() < 2 {
            out.push(format!(
                "method.ensemble_size must be at least 2 to report spread (got {})",
                self.method.ensemble_size()
            ));
        }
        out.extend(self.run.violations());
        out.dedup();
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(&json))
    }
}

fn prefix(section: &str, v: String) -> String {
    if v.starts_with(section) {
        v
    } else {
        format!("{section}.{v}")
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Which assimilation times a sweep cell's RMSE is averaged over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregationWindow {
    #[default]
    AllAssimilationTimes,
    #[serde(rename = "last-50")]
    Last50,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis1: SweepAxis,
    pub axis2: SweepAxis,
    #[serde(default)]
    pub aggregation: AggregationWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub base: ExperimentConfig,
    pub axis1: SweepAxis,
    pub axis2: SweepAxis,
    pub aggregation: AggregationWindow,
}

impl SweepConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = self.base.violations();
        for (name, axis) in [("sweep.axis1", &self.axis1), ("sweep.axis2", &self.axis2)] {
            if axis.values.is_empty() {
                out.push(format!("{name}.values must not be empty"));
            }
            if !self.base.method.parameter_names().contains(&axis.parameter.as_str()) {
                out.push(format!(
                    "{name}.parameter '{}' does not exist on method '{}' (expected one of: {})",
                    axis.parameter,
                    self.base.method.kind(),
                    self.base.method.parameter_names().join(", ")
                ));
            } else {
                for &v in &axis.values {
                    let mut m = self.base.method.clone();
                    if let Err(e) = m.set_parameter(&axis.parameter, v) {
                        out.push(format!("{name}: {e}"));
                    }
                }
            }
        }
        if self.axis1.parameter == self.axis2.parameter {
            out.push("sweep.axis1 and sweep.axis2 must name different parameters".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    /// The experiment for cell `(i, j)`.
    pub fn cell(&self, i: usize, j: usize) -> Result<ExperimentConfig> {
        let mut cfg = self.base.clone();
        cfg.method.set_parameter(&self.axis1.parameter, self.axis1.values[i])?;
        cfg.method.set_parameter(&self.axis2.parameter, self.axis2.values[j])?;
        Ok(cfg)
    }
}

// What actually appears in a file. Everything is optional here so that
// validation can report all missing and invalid fields together.

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    dim: Option<usize>,
    forcing: Option<f64>,
    dt: Option<f64>,
    damping_term: Option<bool>,
    clip_bound: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    model: Option<RawModel>,
    #[serde(default)]
    observation: ObservationModel,
    shock: Option<ShockModel>,
    // Kept generic so that `kind` can default to "ensf".
    method: Option<serde_json::Value>,
    #[serde(default)]
    run: RunSettings,
    sweep: Option<SweepSection>,
}

impl RawFile {
    fn method(&mut self, path: &Path) -> Result<MethodConfig> {
        let Some(mut value) = self.method.take() else { return Ok(MethodConfig::default()) };
        if let Some(table) = value.as_object_mut() {
            table.entry("kind").or_insert_with(|| "ensf".into());
        }
        serde_json::from_value(value)
            .map_err(|e| Error::Parse { path: path.to_path_buf(), message: format!("in [method]: {e}") })
    }

    fn into_experiment(self, method: MethodConfig) -> (ExperimentConfig, Vec<String>) {
        let mut missing = Vec::new();
        let raw = self.model.unwrap_or_default();
        let dim = raw.dim.unwrap_or_else(|| {
            missing.push("model.dim is required (missing field)".to_string());
            MIN_DIMENSION
        });
        let mut model = Lorenz96Params::standard(dim);
        model.forcing = raw.forcing.unwrap_or(model.forcing);
        model.dt = raw.dt.unwrap_or(model.dt);
        model.damping_term = raw.damping_term.unwrap_or(model.damping_term);
        model.clip_bound = raw.clip_bound.unwrap_or(model.clip_bound);
        let cfg = ExperimentConfig {
            model,
            observation: self.observation,
            shock: self.shock,
            method,
            run: self.run,
        };
        (cfg, missing)
    }
}

fn parse_raw(text: &str, path: &Path) -> Result<RawFile> {
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let parsed = if is_json {
        serde_json::from_str(text).map_err(|e| e.to_string())
    } else {
        toml::from_str(text).map_err(|e| e.to_string())
    };
    parsed.map_err(|message| Error::Parse { path: path.to_path_buf(), message: message.trim_end().to_string() })
}

fn finish(cfg: ExperimentConfig, missing: Vec<String>) -> Result<ExperimentConfig> {
    let mut violations = missing;
    let dim_missing = !violations.is_empty();
    violations.extend(cfg.violations().into_iter().filter(|v| !(dim_missing && v.starts_with("model.dim"))));
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Validation(violations))
    }
}

/// Parse and validate an experiment from text; `path` selects the format
/// and appears in diagnostics.
pub fn parse_config(text: &str, path: &Path) -> Result<ExperimentConfig> {
    let mut raw = parse_raw(text, path)?;
    if raw.sweep.is_some() {
        return Err(Error::Validation(vec![
            "sweep section is only accepted by the sweep command".to_string()
        ]));
    }
    let method = raw.method(path)?;
    let (cfg, missing) = raw.into_experiment(method);
    finish(cfg, missing)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&std::fs::read_to_string(path)?, path)
}

pub fn parse_sweep(text: &str, path: &Path) -> Result<SweepConfig> {
    let mut raw = parse_raw(text, path)?;
    let Some(section) = raw.sweep.take() else {
        return Err(Error::Validation(vec!["sweep section is required (missing field)".to_string()]));
    };
    let method = raw.method(path)?;
    let (base, missing) = raw.into_experiment(method);
    let base = finish(base, missing)?;
    let sweep = SweepConfig { base, axis1: section.axis1, axis2: section.axis2, aggregation: section.aggregation };
    sweep.validate()?;
    Ok(sweep)
}

pub fn load_sweep(path: &Path) -> Result<SweepConfig> {
    parse_sweep(&std::fs::read_to_string(path)?, path)
}
