use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the liveness pipeline.
#[derive(Debug, Error)]
pub enum PadError {
    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("invalid capture sequence: {0}")]
    InvalidSequence(String),

    #[error("no usable (non-blank) frames in sequence")]
    NoUsableFrames,

    #[error("insufficient frames: need at least {needed}, found {found}")]
    InsufficientFrames { needed: usize, found: usize },

    #[error("empty {0} mask")]
    EmptyMask(&'static str),

    #[error("no ridge of sufficient length found")]
    EmptyRidgeSet,

    #[error("signal too short: length {len}, need at least {min}")]
    SignalTooShort { len: usize, min: usize },

    #[error("alignment error: measures have lengths {left} and {right}")]
    AlignmentError { left: usize, right: usize },

    #[error("metrics undefined: {0}")]
    MetricsUndefined(String),

    #[error("feature layout mismatch: expected {expected}, found {found}")]
    LayoutMismatch { expected: String, found: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: {detail}")]
    TrainingDiverged {
        epoch: usize,
        batch: usize,
        detail: String,
    },

    #[error("manifest error at {location}: {message}")]
    Manifest { location: String, message: String },

    #[error("capture {capture_id}: missing file {}", path.display())]
    MissingFile { capture_id: String, path: PathBuf },

    #[error("model format: {0}")]
    ModelFormat(String),

    #[error("config: {0}")]
    Config(String),

    #[error("feature file: {0}")]
    FeatureFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = PadError> = std::result::Result<T, E>;
