use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed delimited input: {0}")]
    Csv(#[from] csv::Error),
    #[error("label column {0} not found")]
    LabelColumnMissing(String),
    #[error("column {column:?} is neither numeric nor categorical ({distinct} distinct non-numeric values)")]
    UnparseableColumn { column: String, distinct: usize },
    #[error("no usable rows after applying the missing-value policy")]
    NoUsableRows,
    #[error("labels must contain at least two classes, found {0}")]
    TooFewClasses(usize),
    #[error("column {column:?} has zero variance")]
    ZeroVariance { column: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("input is not standardized (column {column}: mean {mean:.3e}, variance {variance:.6})")]
    NotStandardized {
        column: usize,
        mean: f64,
        variance: f64,
    },
    #[error("unmixing matrix became singular after {restarts} restarts")]
    SingularUnmixing { restarts: usize },
    #[error("zero diagonal entry in unmixing row {0}")]
    ZeroDiagonal(usize),
    #[error("feature {0} is already selected")]
    AlreadySelected(usize),
    #[error("feature index {index} out of range for {n_features} features")]
    FeatureOutOfRange { index: usize, n_features: usize },
    #[error("plug-in estimate limited to {limit} features, got {requested}")]
    ArityCap { limit: usize, requested: usize },
    #[error("split contains a single class")]
    SingleClass,
    #[error("relative absolute error undefined for constant targets")]
    ConstantTarget,
    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Whether this error comes from numerical estimation rather than bad
    /// input or configuration.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::SingularUnmixing { .. } | Error::ZeroDiagonal(_) => true,
            Error::Step { source, .. } => source.is_numeric(),
            _ => false,
        }
    }

    /// Whether this error is a configuration/argument problem.
    pub fn is_config(&self) -> bool {
        match self {
            Error::InvalidArgument(_) | Error::ArityCap { .. } => true,
            Error::Step { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
