use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("barrier height {barrier_ev} eV is not positive (workfunction {workfunction} eV, affinity {affinity} eV)")]
    NonPositiveBarrier {
        barrier_ev: f64,
        workfunction: f64,
        affinity: f64,
    },

    #[error("implicit diode solve did not converge at {voltage} V after {iterations} iterations")]
    NonConvergence { voltage: f64, iterations: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("dimension {dim} has zero spread in the fitting data")]
    ZeroVariance { dim: usize },

    #[error("R² undefined: actual values are constant")]
    ConstantActual,

    #[error("forward cache is stale: {0}")]
    StaleCache(String),

    #[error("{stage} training diverged at epoch {epoch}")]
    Divergence { stage: String, epoch: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing artifact: {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("digest mismatch: {path} has {found}, expected {expected}")]
    DigestMismatch {
        path: String,
        found: String,
        expected: String,
    },

    #[error("malformed file {path}: {message}")]
    Malformed { path: String, message: String },

    #[error("lambda {lambda}: {source}")]
    Sweep {
        lambda: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag for the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::NonPositiveBarrier { .. } => "barrier",
            Error::NonConvergence { .. } => "non_convergence",
            Error::DimensionMismatch { .. } => "dimension",
            Error::ZeroVariance { .. } => "zero_variance",
            Error::ConstantActual => "constant_actual",
            Error::StaleCache(_) => "stale_cache",
            Error::Divergence { .. } => "divergence",
            Error::Checkpoint(_) => "checkpoint",
            Error::VersionMismatch { .. } => "version",
            Error::Config(_) => "config",
            Error::MissingArtifact(_) => "missing_artifact",
            Error::DigestMismatch { .. } => "digest_mismatch",
            Error::Malformed { .. } => "malformed",
            Error::Sweep { .. } => "sweep",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
