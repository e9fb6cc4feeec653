//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}, column '{column}': {message}")]
    BadCell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("target column '{0}' not found in header")]
    TargetColumnNotFound(String),

    #[error("duplicate feature name '{0}'")]
    DuplicateFeatureName(String),

    #[error("classification target must hold integer class codes in [0, C): {0}")]
    InvalidClassTarget(String),

    #[error("missing rate {0} outside [0, 1)")]
    InvalidRate(f64),

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("column '{0}' has no observed training entries")]
    EmptyColumn(String),

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("linear models require fully observed rows; entry {0} is missing")]
    MissingValueForLinearModel(usize),

    #[error("singular normal equations (try ridge > 0)")]
    SingularSystem,

    #[error("{players} coalition players exceed the enumeration limit of {max}")]
    CoalitionLimit { players: usize, max: usize },

    #[error("retrain-mode value function is only available for linear model families with p <= {0}")]
    RetrainUnsupported(usize),

    #[error("sample ids are misaligned between the compared Shapley matrices")]
    MisalignedSamples,

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("theorem scope violation: {0}")]
    TheoremScope(String),

    #[error("model persistence error: {0}")]
    Persist(String),
}
