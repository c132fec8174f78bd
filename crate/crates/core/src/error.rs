use thiserror::Error;

/// Errors raised by simulators, estimators and the sweep harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("series lengths differ: x has {x} samples, y has {y}")]
    LengthMismatch { x: usize, y: usize },

    #[error("non-finite value at sample {index} of a non-missing entry")]
    NonFinite { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: {have} usable rows, need at least {need}")]
    InsufficientData { have: usize, need: usize },

    #[error("insufficient points: k = {k} but only {available} candidates")]
    InsufficientPoints { k: usize, available: usize },

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("numerical escape: {0}")]
    NumericalEscape(String),

    #[error("non-stationary parameters: {0}")]
    NonStationary(String),

    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures that come from the data or the numerics rather than
    /// from a malformed request.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::InsufficientData { .. }
                | Error::InsufficientPoints { .. }
                | Error::DegenerateSeries(_)
                | Error::NumericalEscape(_)
                | Error::NonStationary(_)
                | Error::Undefined(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
