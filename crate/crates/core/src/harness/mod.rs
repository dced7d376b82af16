//! Experiment orchestration: configuration files, seeded twin experiments,
//! hyper-parameter sweeps, method comparisons, timing studies and output
//! files.

pub mod compare;
pub mod config;
pub mod output;
pub mod plot;
pub mod run;
pub mod scaling;
pub mod sweep;

pub use compare::{run_compare, CompareOutput};
pub use config::{
    load_config, load_sweep, parse_config, parse_sweep, AggregationWindow, EnsfSection, ExperimentConfig, LetkfSection,
    MethodConfig, RunSettings, SweepAxis, SweepConfig,
};
pub use output::Format;
pub use run::{run_experiment, run_free_forecast, RunMetadata, RunOutput};
pub use scaling::{run_scaling, time_assimilation_step, ScalingRow, DEFAULT_MAX_DIM};
pub use sweep::{run_sweep, SweepCell, SweepOutput};
