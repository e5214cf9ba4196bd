use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("point kind `{point}` is not supported by the {metric} metric")]
    UniverseMismatch { metric: String, point: String },

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("metric axiom violated: {0}")]
    AxiomViolation(String),

    #[error("{0} must be positive, got {1}")]
    NonPositive(&'static str, f64),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("k = {k} out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("label {label} out of range 1..={classes}")]
    LabelOutOfRange { label: i64, classes: usize },

    #[error("expected {expected} labels, got {found}")]
    LabelMode { expected: &'static str, found: &'static str },

    #[error("length mismatch: {points} points but {labels} labels")]
    LengthMismatch { points: usize, labels: usize },

    #[error("unknown distribution family `{0}`")]
    UnknownFamily(String),

    #[error("unknown classifier `{0}`")]
    UnknownClassifier(String),

    #[error("{0} is not declared for this family")]
    Undeclared(&'static str),

    #[error("quadrature did not converge: error estimate {estimate:e} exceeds {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("schedule `{expr}`: {reason}")]
    Schedule { expr: String, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("invalid model file: {0}")]
    ModelFormat(String),

    #[error("slope fit needs at least 3 positive grid points, got {0}")]
    TooFewPoints(usize),

    #[error("finite instance exceeds enumeration limits: {0}")]
    EnumerationLimit(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the filesystem rather than by invalid input.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::Csv(e) => e.is_io_error(),
            Error::Json(e) => e.is_io(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
