use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("schema error in {path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("dt mismatch: expected {expected}, got {actual}")]
    DtMismatch { expected: f64, actual: f64 },

    #[error("frame {frame} out of range (scenario has {frames} frames)")]
    OutOfRange { frame: usize, frames: usize },

    #[error("horizon mismatch: expected {expected} steps, got {actual}")]
    HorizonMismatch { expected: usize, actual: usize },

    #[error("invalid trajectory: {0}")]
    Trajectory(String),

    #[error("riccati iteration did not converge (residual {residual:e})")]
    RiccatiNonConvergence { residual: f64 },

    #[error("lqr problem ill-posed: {0}")]
    LqrIllPosed(String),

    #[error("empty vocabulary")]
    EmptyVocabulary,

    #[error("invalid vocabulary input: {0}")]
    Vocabulary(String),

    #[error("metric window misaligned: {0}")]
    WindowMisaligned(String),

    #[error("metric weights sum to zero")]
    ZeroWeightSum,

    #[error("no planner proposal could be simulated")]
    NoProposal,

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("scaling fit: {0}")]
    Fit(String),

    #[error("non-positive data size n={n} at row {row}")]
    NonPositiveN { row: usize, n: f64 },

    #[error("export: {0}")]
    Export(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
