use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the dynamics, filters and experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {dim}: Lorenz-96 requires at least {min} components")]
    InvalidDimension { dim: usize, min: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("pseudo-time {0} lies outside [0, 1]")]
    Domain(f64),

    #[error("non-finite value produced during {0}")]
    NumericalOverflow(&'static str),

    #[error("non-finite input to {0}")]
    NonFinite(&'static str),

    #[error("backward sampler diverged at pseudo-step {step}, member {member}")]
    SamplerDivergence { step: usize, member: usize },

    #[error("ensemble of {members} members is too small (need at least {required})")]
    InsufficientEnsemble { members: usize, required: usize },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("configuration is invalid:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in the CLI error report.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDimension { .. } => "invalid-dimension",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::InvalidConfig(_) => "invalid-configuration",
            Error::Domain(_) => "domain",
            Error::NumericalOverflow(_) => "numerical-overflow",
            Error::NonFinite(_) => "non-finite-input",
            Error::SamplerDivergence { .. } => "sampler-divergence",
            Error::InsufficientEnsemble { .. } => "insufficient-ensemble",
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
