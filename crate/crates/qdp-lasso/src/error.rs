//! Crate-wide error type.
//!
//! Every fallible public operation returns [`Result`]. Aborts that carry
//! semantic weight (the pre-run examination gate, sampler exhaustion) get
//! dedicated variants so callers can react to them without string matching.

use thiserror::Error;

/// Errors produced by dataset handling, fitting, mechanisms, and experiment
/// drivers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input data is degenerate for the requested operation (all-zero design
    /// matrix, zero ground-truth vector, ...).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// The pre-run examination gate refused to run the private mechanism:
    /// `l1 / lambda >= ln(1/varsigma)`, so per-proposal acceptance could fall
    /// below the level the proposal cap was sized for.
    #[error(
        "examination gate abort: l1/lambda = {ratio:.6} >= ln(1/varsigma) = {threshold:.6} \
         (l1 = {l1:.6}, lambda = {lambda:.6}, varsigma = {varsigma}); \
         increase epsilon, N, or varsigma"
    )]
    GateAbort {
        l1: f64,
        lambda: f64,
        varsigma: f64,
        ratio: f64,
        threshold: f64,
    },

    /// The rejection sampler exhausted its proposal cap without accepting.
    #[error(
        "index sampler failed at iteration {iteration}: no proposal accepted within cap {cap}"
    )]
    SamplerExhausted { iteration: usize, cap: u64 },

    /// A persisted file could not be parsed. `context` names the offending
    /// line or row.
    #[error("parse error in {path}: {context}")]
    Parse { path: String, context: String },

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateInput(msg.into())
    }

    pub(crate) fn parse(path: impl Into<String>, context: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            context: context.into(),
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
