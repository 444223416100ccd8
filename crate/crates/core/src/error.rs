use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("Zadoff-Chu root {root} is not coprime with length {length}")]
    NotCoprime { root: u64, length: usize },

    #[error("unsupported modulation order {0}")]
    UnsupportedOrder(u32),

    #[error("variance must be non-negative, got {0}")]
    NegativeVariance(f64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("range must be strictly positive, got {0} m")]
    NonPositiveRange(f64),

    #[error("lag ({dm}, {dn}) outside the observation matrix")]
    LagOutOfRange { dm: isize, dn: isize },

    #[error("degenerate estimator input: {0}")]
    Degenerate(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("learning rate must be positive, got {0}")]
    NonPositiveLearningRate(f64),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "invalid_config",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::NotCoprime { .. } => "not_coprime",
            Error::UnsupportedOrder(_) => "unsupported_order",
            Error::NegativeVariance(_) => "negative_variance",
            Error::Empty(_) => "empty_input",
            Error::NonPositiveRange(_) => "non_positive_range",
            Error::LagOutOfRange { .. } => "lag_out_of_range",
            Error::Degenerate(_) => "degenerate",
            Error::Shape(_) => "shape_mismatch",
            Error::NonPositiveLearningRate(_) => "non_positive_lr",
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
        }
    }
}
