use std::path::PathBuf;

use crate::trajectory::Trajectory;

/// Errors produced by the solvers, diagnostics and the experiment runner.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// The integrator gave up. The samples produced before the failure are kept.
    #[error("integration failure at t = {at}: {reason}")]
    IntegrationFailure {
        at: f64,
        reason: String,
        partial: Box<Trajectory>,
    },

    #[error("quadrature failed to converge on [{a}, {b}] (estimated error {estimate:e})")]
    QuadratureFailure { a: f64, b: f64, estimate: f64 },

    #[error("sampling too coarse to unwrap phase between t = {t0} and t = {t1}")]
    NeedsDenserSampling { t0: f64, t1: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
