//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes of the operands do not conform.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A constructor received NaN or an infinity.
    #[error("non-finite entry at linear index {0}")]
    NonFinite(usize),

    /// A matrix that must be invertible is singular or nearly so.
    #[error("matrix is singular or ill-conditioned (condition estimate {cond:.3e}, limit {limit:.3e})")]
    IllConditioned { cond: f64, limit: f64 },

    /// An operation that requires an orthogonal transform got a non-orthogonal one.
    #[error("transform is not orthogonal (defect {defect:.3e}, tolerance {tol:.3e}); this operation requires an orthogonal transform")]
    NotOrthogonal { defect: f64, tol: f64 },

    /// An operation that requires facewise symmetry got an asymmetric tensor.
    #[error("tensor is not symmetric (max |A - A^T| = {0:.3e})")]
    NotSymmetric(f64),

    /// The input is outside the PSD cone where membership is required.
    #[error("tensor is not positive semidefinite (transformed slice {slice}, min eigenvalue {eigenvalue:.3e})")]
    NotPsd { slice: usize, eigenvalue: f64 },

    /// A size-gated operation was called beyond its limit.
    #[error("{what}: size {n} exceeds the supported limit {limit}")]
    TooLarge {
        what: &'static str,
        n: usize,
        limit: usize,
    },

    /// The sliced M-SDP route was asked to handle a constraint that is not
    /// supported on a single transformed slice.
    #[error("sliced-route precondition violated: {0}; use the general solver")]
    NotSliceSeparable(String),

    /// Anything else the caller got wrong.
    #[error("{0}")]
    InvalidArgument(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A structured text file failed to parse.
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// A binary file violated the format contract.
    #[error("bad file format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
