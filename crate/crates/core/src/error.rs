use alloc::string::String;
use alloc::vec::Vec;

use crate::C64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FockError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite integrand value at node {node:?}")]
    NonFinite { node: Vec<C64> },

    #[error("eigensolver did not converge (dimension {0})")]
    Eigensolver(usize),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("symbol carries no directional-limit metadata")]
    MissingLimits,

    #[error("lambda = {lambda} is within {distance:.3e} of the estimated essential spectrum")]
    NotFredholm { lambda: C64, distance: f64 },

    /// Kernel/cokernel counts disagree across the requested truncation degrees.
    /// Each entry is `(degree, kernel_count, cokernel_count)`.
    #[error("index counts unstable across degrees: {counts:?}")]
    Inconclusive { counts: Vec<(usize, usize, usize)> },
}

pub(crate) fn invalid(msg: impl Into<String>) -> FockError {
    FockError::InvalidParameter(msg.into())
}
