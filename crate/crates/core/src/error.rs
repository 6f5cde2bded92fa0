use thiserror::Error;

/// Errors raised by the numerics, construction and verification layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate span: {0}")]
    DegenerateSpan(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("index out of range: {0}")]
    Index(String),

    /// A generic-channel assumption failed on this particular draw.
    #[error("degenerate channel in {stage}: {detail}")]
    DegenerateChannel { stage: &'static str, detail: String },

    /// Not enough interference-free dimensions to decode the requested streams.
    #[error("feasibility error: {0}")]
    Feasibility(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn degenerate(stage: &'static str, detail: impl Into<String>) -> Self {
        Error::DegenerateChannel {
            stage,
            detail: detail.into(),
        }
    }

    /// True for errors caused by the problem setup rather than by arithmetic.
    pub fn is_configuration(&self) -> bool {
        matches!(self, Error::Configuration(_) | Error::Feasibility(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
