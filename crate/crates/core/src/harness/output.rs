//! Files written by the harness.
//!
//! | file               | contents                                        |
//! |--------------------|-------------------------------------------------|
//! | `metrics.csv/json` | one row per repetition and model step           |
//! | `metadata.json`    | digests, seed, version, per-repetition status, wall time |
//! | `snapshots.csv`    | truth and ensemble mean at the snapshot stride  |
//! | `sweep.json/csv`   | cell table and best cells                       |
//! | `scaling.csv/json` | timing table                                    |
//! | `*.svg`            | optional charts                                 |
//!
//! Everything except fields named `wall_time_seconds` and the timing
//! columns of the scaling table is a pure function of config and seed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::compare::CompareOutput;
use super::plot;
use super::run::RunOutput;
use super::scaling::ScalingRow;
use super::sweep::SweepOutput;
use crate::error::{Error, Result};
use crate::metrics::{MetricsRecord, RecordKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidConfig(format!("unknown format '{other}' (expected csv or json)"))),
        }
    }
}

pub fn write_rows_csv<T: Serialize, W: Write>(rows: &[T], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_rows<T: Serialize>(dir: &Path, stem: &str, rows: &[T], format: Format) -> Result<PathBuf> {
    let path = dir.join(format!("{stem}.{}", if format == Format::Csv { "csv" } else { "json" }));
    match format {
        Format::Csv => write_rows_csv(rows, fs::File::create(&path)?)?,
        Format::Json => write_json(&path, rows)?,
    }
    Ok(path)
}

#[derive(Serialize)]
struct SnapshotRow {
    repetition: usize,
    time_index: usize,
    component: usize,
    truth: f64,
    estimate: f64,
}

fn rmse_chart(runs: &[&RunOutput], kind: Option<RecordKind>, title: &str) -> String {
    let series: Vec<(String, Vec<(f64, f64)>)> = runs
        .iter()
        .map(|r| (r.metadata.label.clone(), r.mean_series(kind).into_iter().map(|(t, v)| (t as f64, v)).collect()))
        .collect();
    plot::line_chart(title, "time step", "RMSE", &series)
}

fn write_charts(dir: &Path, runs: &[&RunOutput]) -> Result<Vec<PathBuf>> {
    let a = dir.join("rmse_assimilation.svg");
    fs::write(&a, rmse_chart(runs, Some(RecordKind::Assimilation), "RMSE at assimilation times"))?;
    let b = dir.join("rmse_all_steps.svg");
    fs::write(&b, rmse_chart(runs, None, "RMSE at every time step"))?;
    Ok(vec![a, b])
}

/// Write a single run; returns the paths written.
pub fn write_run(dir: &Path, out: &RunOutput, format: Format, charts: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = vec![write_rows(dir, "metrics", &out.records, format)?];
    let meta = dir.join("metadata.json");
    write_json(&meta, &out.metadata)?;
    paths.push(meta);
    if !out.snapshots.is_empty() {
        let rows: Vec<SnapshotRow> = out
            .snapshots
            .iter()
            .flat_map(|s| {
                s.truth.iter().zip(&s.estimate).enumerate().map(|(component, (&truth, &estimate))| SnapshotRow {
                    repetition: s.repetition,
                    time_index: s.time_index,
                    component,
                    truth,
                    estimate,
                })
            })
            .collect();
        paths.push(write_rows(dir, "snapshots", &rows, format)?);
    }
    if charts {
        paths.extend(write_charts(dir, &[out])?);
    }
    Ok(paths)
}

#[derive(Serialize)]
struct CompareMetadata<'a> {
    truth_digest: &'a str,
    runs: Vec<&'a super::run::RunMetadata>,
}

pub fn write_compare(dir: &Path, out: &CompareOutput, format: Format, charts: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = vec![write_rows(dir, "metrics", &out.records(), format)?];
    let meta = dir.join("metadata.json");
    write_json(&meta, &CompareMetadata { truth_digest: out.truth_digest(), runs: out.runs.iter().map(|r| &r.metadata).collect() })?;
    paths.push(meta);
    if charts {
        paths.extend(write_charts(dir, &out.runs.iter().collect::<Vec<_>>())?);
    }
    Ok(paths)
}

pub fn write_sweep(dir: &Path, out: &SweepOutput, charts: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let json = dir.join("sweep.json");
    write_json(&json, out)?;
    let csv = write_rows(dir, "sweep", &out.cells, Format::Csv)?;
    let mut paths = vec![json, csv];
    if charts {
        let values: Vec<Vec<Option<f64>>> = (0..out.values1.len())
            .map(|i| (0..out.values2.len()).map(|j| out.cell(i, j)).map(|c| c.rmse.filter(|_| !c.divergent)).collect())
            .collect();
        let svg = plot::heatmap(
            &format!("{} aggregated RMSE", out.method),
            &out.parameter1,
            &out.parameter2,
            &out.values1,
            &out.values2,
            &values,
            &out.best,
        );
        let p = dir.join("sweep.svg");
        fs::write(&p, svg)?;
        paths.push(p);
    }
    Ok(paths)
}

pub fn write_scaling(dir: &Path, rows: &[ScalingRow], format: Format) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    Ok(vec![write_rows(dir, "scaling", rows, format)?])
}
