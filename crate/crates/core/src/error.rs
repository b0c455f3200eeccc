use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used for CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Caller passed something that violates a precondition.
    Input,
    /// Run configuration could not be parsed or validated.
    Config,
    /// External data (counts CSV, beta file) is malformed.
    Data,
    /// The physics produced an unusable result (empty ensemble, underflow).
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis label '{label}' does not exist for dimension {dim}")]
    InvalidBasis { label: char, dim: usize },

    #[error("unsupported dimension {0} (expected 2 or 3)")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("postselected ensemble is empty (success probability {0:e})")]
    EmptyEnsemble(f64),

    #[error("survival probability underflow at t = {0} us")]
    SurvivalUnderflow(f64),

    #[error("readout model cannot explain outcome {outcome} (zero predicted probability)")]
    InconsistentModel { outcome: usize },

    #[error("superposition cancels (norm {0:e})")]
    Cancellation(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("data error at row {row}: {message}")]
    Data { row: usize, message: String },

    #[error("data error: {0}")]
    DataFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Data { .. } | Error::DataFormat(_) | Error::Io(_) => ErrorKind::Data,
            Error::EmptyEnsemble(_)
            | Error::SurvivalUnderflow(_)
            | Error::Cancellation(_)
            | Error::InconsistentModel { .. } => ErrorKind::Numerical,
            _ => ErrorKind::Input,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
