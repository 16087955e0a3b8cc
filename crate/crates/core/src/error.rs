//! Shared error type for the crate.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across the pipeline, from CSV ingestion to
/// numerical factorizations. The CLI maps these onto exit-code classes
/// (config / data / numerical).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("column '{0}' not found in header")]
    MissingColumn(String),

    #[error("non-numeric value '{value}' at data row {row}, column '{column}'")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("duplicate feature name '{0}'")]
    DuplicateFeature(String),

    #[error("unknown feature '{0}'")]
    UnknownFeature(String),

    #[error("labels must be 0 or 1, found {0}")]
    NonBinaryLabel(u8),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("sample fraction {0} outside (0, 1]")]
    FractionOutOfRange(f64),

    #[error("requested {requested} rows but only {available} available")]
    NotEnoughRows { requested: usize, available: usize },

    #[error("input has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid kernel parameters: {0}")]
    InvalidKernel(String),

    #[error("invalid threshold policy: {0}")]
    InvalidPolicy(String),

    #[error("Cholesky factorization failed after jitter escalation")]
    CholeskyFailed,

    #[error("predictive variance {0} negative beyond tolerance")]
    NegativeVariance(f64),

    #[error("fit has not converged; refusing to predict")]
    UnconvergedFit,

    #[error("training set of {got} rows exceeds the configured limit of {limit}")]
    TrainSizeExceeded { got: usize, limit: usize },

    #[error("rule syntax error at line {line}, column {column}: {message}")]
    RuleSyntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid rule model: {0}")]
    InvalidRule(String),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("threshold grid is empty")]
    EmptyGrid,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Tag a stage name onto an error for pipeline reporting.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
