use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error in {function}: {message}")]
    Domain { function: &'static str, message: String },

    #[error("quadrature did not converge: estimated error {estimated_error:e} after {subdivisions} subdivisions")]
    QuadratureNonConvergence { estimated_error: f64, subdivisions: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("tie between the last two observations ({0}); the maximal invariant is undefined")]
    Tie(f64),

    #[error("no draw landed in the acceptance ball after {drawn} draws")]
    InsufficientAcceptance { drawn: u64 },

    #[error("empty window: no point within bandwidth {bandwidth} of {x}")]
    EmptyWindow { x: f64, bandwidth: f64 },

    #[error("zero denominator: every weight vanished")]
    ZeroDenominator,

    #[error("empty input to {0}")]
    EmptyInput(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn domain(function: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            function,
            message: message.into(),
        }
    }

    /// Short machine-readable code, used when a failed replication is recorded.
    pub fn reason_code(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::QuadratureNonConvergence { .. } => "quadrature",
            Error::DegenerateSample(_) => "degenerate",
            Error::Tie(_) => "tie",
            Error::InsufficientAcceptance { .. } => "no-acceptance",
            Error::EmptyWindow { .. } => "empty-window",
            Error::ZeroDenominator => "zero-denominator",
            Error::EmptyInput(_) => "empty",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
