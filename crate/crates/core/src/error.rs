use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("degenerate instance: every row and column gap is zero")]
    DegenerateInstance,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-identifiable: {0}")]
    NonIdentifiable(String),

    #[error("optimal arm is not unique")]
    NonUniqueOptimum,

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("infeasible spectral shape: {0}")]
    InfeasibleSpectrum(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("invalid policy spec `{spec}`: {reason}")]
    PolicySpec { spec: String, reason: String },

    #[error("linear program oracle failed: {0}")]
    Oracle(String),

    #[error("empty results: {0}")]
    EmptyResults(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag, used in the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInstance(_) => "invalid_instance",
            Error::DegenerateInstance => "degenerate_instance",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NonIdentifiable(_) => "non_identifiable",
            Error::NonUniqueOptimum => "non_unique_optimum",
            Error::Overflow(_) => "overflow",
            Error::InfeasibleSpectrum(_) => "infeasible_spectrum",
            Error::ContractViolation(_) => "contract_violation",
            Error::PolicySpec { .. } => "policy_spec",
            Error::Oracle(_) => "oracle",
            Error::EmptyResults(_) => "empty_results",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
