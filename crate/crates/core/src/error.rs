use thiserror::Error;

/// Errors raised by the modelling, metric and design routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IsacError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{name} = {value} is outside {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("symbol for user {0} is zero, its phase is undefined")]
    ZeroSymbol(usize),

    #[error("refusing statistical output from {0} trials (need at least 1000)")]
    TooFewTrials(usize),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, IsacError>;

pub(crate) fn dim(msg: impl Into<String>) -> IsacError {
    IsacError::Dimension(msg.into())
}
