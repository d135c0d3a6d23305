use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("point {0:?} lies outside the cone")]
    OutsideCone(Vec<f64>),

    #[error("stencil of radius {h} around {point:?} leaves the open cone")]
    StencilOutsideCone { point: Vec<f64>, h: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical method did not converge: {0}")]
    NonConvergence(String),

    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),

    #[error("bound constant diverges under grid refinement: {0}")]
    Divergence(String),

    #[error("inconsistent trace: {0}")]
    InconsistentTrace(String),

    #[error("fit rejected: {0}")]
    Fit(String),

    #[error("configuration invalid:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument { name, reason: reason.into() }
    }

    /// True for errors caused by bad user input rather than a numerical fault.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidDomain(_)
                | Error::InvalidArgument { .. }
                | Error::OutsideCone(_)
                | Error::StencilOutsideCone { .. }
                | Error::Precondition(_)
                | Error::Config(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
