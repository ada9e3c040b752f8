use thiserror::Error;

use crate::prox::ProxResult;
use crate::spg::SolverState;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("nonsmooth component exposes no dual structure")]
    UnsupportedStructure,

    #[error(
        "inner solver stopped after {iterations} iterations with certificate {certificate:.3e} above target {target:.3e}"
    )]
    InnerSolverFailure {
        /// Best iterate found, with its (unmet) certificate.
        best: Box<ProxResult>,
        iterations: usize,
        certificate: f64,
        target: f64,
    },

    /// An outer step whose inner solve failed. `state` is the state advanced
    /// with the best available inner iterate, so callers may keep going.
    #[error("step {k} failed: {source}")]
    StepFailed {
        k: usize,
        state: Box<SolverState>,
        #[source]
        source: Box<Error>,
    },

    #[error("stepsize policy not applicable: {0}")]
    PolicyInapplicable(String),

    #[error("vocabulary too small: {found} distinct words, {requested} requested")]
    VocabularyTooSmall { found: usize, requested: usize },

    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
