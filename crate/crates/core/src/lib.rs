//! Ensemble score filter (EnSF) for high-dimensional nonlinear filtering,
//! with a Lorenz-96 twin-experiment engine, an LETKF baseline and an
//! experiment harness.
//!
//! The filter represents the prior filtering density by a prediction
//! ensemble, estimates the score of its diffused versions by Monte Carlo
//! directly from the ensemble (no training), injects the observation through
//! a damped log-likelihood gradient and samples the posterior by integrating
//! the backward diffusion SDE.

pub mod diffusion;
pub mod ensemble;
pub mod ensf;
pub mod error;
pub mod harness;
pub mod ldyn;
pub mod letkf;
pub mod metrics;
pub mod rng;
pub mod score;

pub use diffusion::DiffusionSchedule;
pub use ensemble::Ensemble;
pub use ensf::{analyze, backward_sample, ensf_step, EnsfConfig};
pub use error::{Error, Result};
pub use ldyn::{Lorenz96Params, ObservationModel, ObservationOperator, ShockModel};
pub use letkf::{letkf_analysis, LetkfConfig};
pub use metrics::{crps, ensemble_spread, rmse, MetricsRecord, RecordKind};
