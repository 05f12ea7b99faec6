use std::path::PathBuf;

use thiserror::Error;

use crate::types::TaskLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {what} at row {row}, column {col}")]
    NonFiniteValue {
        what: &'static str,
        row: usize,
        col: usize,
    },

    #[error("too few samples: need at least {required}, found {found}")]
    TooFewSamples { required: usize, found: usize },

    #[error("series too short for resampling: length {0} (need >= 2)")]
    TooShort(usize),

    #[error("cannot split {rows} rows into {folds} folds")]
    TooFewRows { rows: usize, folds: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("trials mix tasks or subjects: {0}")]
    MixedTasks(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("target has zero variance")]
    DegenerateTarget,

    #[error("k = {k} exceeds the {rows} available training rows")]
    KTooLarge { k: usize, rows: usize },

    #[error("optimizer did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("{rows} training rows exceed the cap of {cap}")]
    TooManyRows { rows: usize, cap: usize },

    #[error("kernel matrix is not positive definite (jitter escalated to {jitter:e})")]
    NotPositiveDefinite { jitter: f64 },

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("invalid noise covariance: {0}")]
    InvalidNoise(String),

    #[error("invalid archetype {label}: {reason}")]
    InvalidArchetype { label: TaskLabel, reason: String },

    #[error("missing dataset for task {0}")]
    MissingTask(TaskLabel),

    #[error("missing entries: {0}")]
    MissingEntries(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error once fold and context wrappers are peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::Fold { source, .. } | Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}
