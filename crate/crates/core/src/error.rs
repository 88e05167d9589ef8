use thiserror::Error;

/// Errors raised by the inference, analysis and reporting layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The observed outcome has (numerically) zero probability under the prior.
    #[error("zero evidence: outcome probability {evidence:e} under the current distribution")]
    ZeroEvidence { evidence: f64 },

    #[error("alpha series for j = {j} did not converge: last term {last_term:e} after {terms} terms")]
    TruncationNotConverged { j: usize, last_term: f64, terms: usize },

    #[error("alpha series covers j <= {available}, but the comb requires j = {required}")]
    InsufficientSeries { required: usize, available: usize },

    #[error("comb conditional entropy needs full contrast (infinite coherence time), decay factor is {decay}")]
    FiniteCoherence { decay: f64 },

    #[error("config error for key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("i/o error on {path}: {reason}")]
    Io { path: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config { key: key.into(), reason: reason.into() }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), reason: err.to_string() }
    }
}
