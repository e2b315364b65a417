use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid physical parameters (masses, couplings, exponents).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    /// A state or argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An analysis step (root bracketing, eigen decomposition) failed.
    #[error("analysis error: {0}")]
    Analysis(String),
    /// The integrator could not make progress.
    #[error("integration error: {0}")]
    Integration(String),
    /// An iterative refinement failed to converge.
    #[error("convergence failure: {message} (residual history: {history:?})")]
    Convergence { message: String, history: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
