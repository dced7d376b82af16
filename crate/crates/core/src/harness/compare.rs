//! Several methods against one truth and observation realization.

use serde_json::Value;

use super::config::ExperimentConfig;
use super::run::{run_experiment, RunOutput};
use crate::error::{Error, Result};
use crate::metrics::MetricsRecord;

#[derive(Debug, Clone)]
pub struct CompareOutput {
    /// One run per input configuration, in input order.
    pub runs: Vec<RunOutput>,
}

impl CompareOutput {
    /// All rows, grouped by run in input order.
    pub fn records(&self) -> Vec<MetricsRecord> {
        self.runs.iter().flat_map(|r| r.records.iter().cloned()).collect()
    }

    pub fn truth_digest(&self) -> &str {
        &self.runs[0].metadata.truth_digest
    }
}

/// Everything that must agree between compared configurations: all
/// sections except `method` and the run label.
fn shared_part(cfg: &ExperimentConfig) -> Value {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    let obj = v.as_object_mut().expect("config is an object");
    obj.remove("method");
    obj.get_mut("run").and_then(Value::as_object_mut).map(|run| run.remove("label"));
    obj.entry("shock").or_insert(Value::Null);
    v
}

pub fn compare_violations(cfgs: &[ExperimentConfig]) -> Vec<String> {
    let Some(first) = cfgs.first() else {
        return vec!["compare needs at least one configuration".to_string()];
    };
    let reference = shared_part(first);
    let mut out = Vec::new();
    for (k, cfg) in cfgs.iter().enumerate() {
        out.extend(cfg.violations().into_iter().map(|v| format!("config[{k}]: {v}")));
        if k == 0 {
            continue;
        }
        let other = shared_part(cfg);
        for section in ["model", "observation", "shock", "run"] {
            if other[section] != reference[section] {
                out.push(format!("config[{k}].{section} differs from config[0].{section}"));
            }
        }
    }
    out
}

/// Labels made unique by appending the 1-based position where needed.
fn unique_labels(cfgs: &[ExperimentConfig]) -> Vec<String> {
    let labels: Vec<String> = cfgs.iter().map(ExperimentConfig::label).collect();
    labels
        .iter()
        .enumerate()
        .map(|(k, l)| {
            if labels.iter().filter(|m| *m == l).count() > 1 {
                format!("{l}-{}", k + 1)
            } else {
                l.clone()
            }
        })
        .collect()
}

pub fn run_compare(cfgs: &[ExperimentConfig]) -> Result<CompareOutput> {
    let v = compare_violations(cfgs);
    if !v.is_empty() {
        return Err(Error::Validation(v));
    }
    let runs = cfgs
        .iter()
        .zip(unique_labels(cfgs))
        .map(|(cfg, label)| {
            let mut cfg = cfg.clone();
            cfg.run.label = Some(label);
            run_experiment(&cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    if runs.iter().any(|r| r.metadata.truth_digest != runs[0].metadata.truth_digest) {
        return Err(Error::InvalidConfig("compared runs produced different truth trajectories".into()));
    }
    Ok(CompareOutput { runs })
}
