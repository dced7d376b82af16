//! `ensf` command-line front end for the experiment harness.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ensf_core::harness::{
    self, output, run_compare, run_experiment, run_scaling, run_sweep, AggregationWindow, ExperimentConfig, Format,
};
use ensf_core::Error;
use serde_json::{json, Value};

/// Environment variable that overrides the default output directory.
const OUT_DIR_ENV: &str = "ENSF_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "ensf-out";

#[derive(Parser)]
#[command(name = "ensf", version, about = "Ensemble score filter twin experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory [default: $ENSF_OUT_DIR, else ./ensf-out].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override run.master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override run.repetitions.
    #[arg(long)]
    reps: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Format of metric tables.
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
    /// Also write SVG charts.
    #[arg(long)]
    plot: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one twin experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a two-parameter hyper-parameter grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run several methods against the same truth (repeat --config).
    Compare {
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Time one assimilation step over a list of dimensions.
    Scaling {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated, strictly ascending dimensions.
        #[arg(long, value_delimiter = ',', default_values_t = [100usize, 1_000, 10_000])]
        dims: Vec<usize>,
        /// Largest dimension allowed.
        #[arg(long, default_value_t = harness::DEFAULT_MAX_DIM)]
        max_dim: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Parse and validate a configuration or sweep file.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

fn out_dir(flag: &Option<PathBuf>) -> PathBuf {
    flag.clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn setup(common: &Common) -> Result<Format, Error> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("cannot configure {n} threads: {e}")))?;
    }
    common.format.parse()
}

fn apply_overrides(cfg: &mut ExperimentConfig, common: &Common) -> Result<(), Error> {
    if let Some(s) = common.seed {
        cfg.run.master_seed = s;
    }
    if let Some(r) = common.reps {
        cfg.run.repetitions = r;
    }
    cfg.validate()
}

fn paths(p: Vec<PathBuf>) -> Value {
    json!(p.iter().map(|p| p.display().to_string()).collect::<Vec<_>>())
}

fn cmd_run(config: &Path, common: &Common) -> Result<Value, Error> {
    let format = setup(common)?;
    let mut cfg = harness::load_config(config)?;
    apply_overrides(&mut cfg, common)?;
    let out = run_experiment(&cfg)?;
    let files = output::write_run(&out_dir(&common.out), &out, format, common.plot)?;
    Ok(json!({
        "command": "run",
        "label": out.metadata.label,
        "rmse_all_assimilation": finite(out.aggregate_rmse(AggregationWindow::AllAssimilationTimes)),
        "rmse_last_50": finite(out.aggregate_rmse(AggregationWindow::Last50)),
        "diverged_repetitions": out.metadata.repetitions.iter().filter(|r| r.divergence.is_some()).count(),
        "files": paths(files),
    }))
}

fn cmd_sweep(config: &Path, common: &Common) -> Result<Value, Error> {
    setup(common)?;
    let mut cfg = harness::load_sweep(config)?;
    apply_overrides(&mut cfg.base, common)?;
    let out = run_sweep(&cfg)?;
    let files = output::write_sweep(&out_dir(&common.out), &out, common.plot)?;
    let best: Vec<Value> = out
        .best
        .iter()
        .map(|&(i, j)| {
            let c = out.cell(i, j);
            json!({ out.parameter1.as_str(): c.value1, out.parameter2.as_str(): c.value2, "rmse": c.rmse })
        })
        .collect();
    Ok(json!({
        "command": "sweep",
        "best": best,
        "divergent_cells": out.divergent_count(),
        "files": paths(files),
    }))
}

fn cmd_compare(configs: &[PathBuf], common: &Common) -> Result<Value, Error> {
    let format = setup(common)?;
    let mut cfgs = configs.iter().map(|p| harness::load_config(p)).collect::<Result<Vec<_>, _>>()?;
    for c in &mut cfgs {
        apply_overrides(c, common)?;
    }
    let out = run_compare(&cfgs)?;
    let files = output::write_compare(&out_dir(&common.out), &out, format, common.plot)?;
    let summary: Vec<Value> = out
        .runs
        .iter()
        .map(|r| json!({ "label": r.metadata.label, "rmse_last_50": finite(r.aggregate_rmse(AggregationWindow::Last50)) }))
        .collect();
    Ok(json!({ "command": "compare", "truth_digest": out.truth_digest(), "runs": summary, "files": paths(files) }))
}

fn cmd_scaling(config: &Path, dims: &[usize], max_dim: usize, common: &Common) -> Result<Value, Error> {
    let format = setup(common)?;
    let mut cfg = harness::load_config(config)?;
    if let Some(s) = common.seed {
        cfg.run.master_seed = s;
    }
    let reps = common.reps.unwrap_or(20);
    let rows = run_scaling(dims, &cfg, reps, max_dim)?;
    let files = output::write_scaling(&out_dir(&common.out), &rows, format)?;
    let table: Vec<Value> = rows.iter().map(|r| json!({ "dim": r.dim, "mean_seconds": r.mean_seconds })).collect();
    Ok(json!({ "command": "scaling", "rows": table, "files": paths(files) }))
}

fn cmd_validate(config: &Path) -> Result<Value, Error> {
    let text = std::fs::read_to_string(config)?;
    match harness::parse_config(&text, config) {
        Ok(cfg) => Ok(json!({ "valid": true, "kind": "experiment", "config_digest": cfg.digest(), "config": cfg })),
        Err(Error::Validation(v)) if v.iter().any(|m| m.starts_with("sweep section")) => {
            let s = harness::parse_sweep(&text, config)?;
            Ok(json!({ "valid": true, "kind": "sweep", "config_digest": s.base.digest(), "config": s }))
        }
        Err(e) => Err(e),
    }
}

fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn error_json(e: &Error) -> Value {
    let details = match e {
        Error::Validation(v) => json!(v),
        _ => Value::Null,
    };
    json!({ "error": { "kind": e.kind(), "message": e.to_string(), "details": details } })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let report = json!({ "error": { "kind": "usage", "message": e.to_string().trim_end(), "details": null } });
            eprintln!("{report}");
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Run { config, common } => cmd_run(config, common),
        Command::Sweep { config, common } => cmd_sweep(config, common),
        Command::Compare { configs, common } => cmd_compare(configs, common),
        Command::Scaling { config, dims, max_dim, common } => cmd_scaling(config, dims, *max_dim, common),
        Command::ValidateConfig { config } => cmd_validate(config),
    };
    match result {
        Ok(summary) => {
            // A closed stdout (e.g. piped into `head`) is not an error worth a panic.
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}
