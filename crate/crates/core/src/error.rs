use thiserror::Error;

/// Errors produced by the learnrate library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("integer overflow computing {0}")]
    Overflow(String),

    #[error("horizon n = {n} exceeds the limit of {limit}")]
    Resource { n: usize, limit: usize },

    #[error("probabilities would underflow: n * rate = {exponent:.1} exceeds {limit}")]
    Underflow { exponent: f64, limit: f64 },

    #[error("unsupported strategy combination: {0}")]
    UnsupportedCombo(String),

    #[error("objective evaluated to NaN at x = {0}")]
    NanObjective(f64),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

impl Error {
    /// Short machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Overflow(_) => "overflow",
            Error::Resource { .. } => "resource",
            Error::Underflow { .. } => "underflow",
            Error::UnsupportedCombo(_) => "unsupported_combo",
            Error::NanObjective(_) => "nan_objective",
            Error::Singular(_) => "singular",
            Error::Dimension(_) => "dimension",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
