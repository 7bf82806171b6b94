use thiserror::Error;

/// Errors raised by the manifold kernels, retractions, solvers and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("infeasible point: constraint residual {residual:e} exceeds {tol:e}")]
    Infeasible { residual: f64, tol: f64 },

    #[error("direction is not tangent: skew residual {residual:e} exceeds {tol:e}")]
    NotTangent { residual: f64, tol: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A p-by-p (or 2p-by-2p) system that should be invertible is numerically singular.
    /// For the curve schemes this means the step `tau` is far too large.
    #[error("numerically singular system in {0}")]
    Singular(&'static str),

    #[error("rank-deficient matrix in {0}")]
    RankDeficient(&'static str),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("not a descent direction: slope {0:e} >= 0")]
    NonDescent(f64),

    #[error("line search exceeded {0} backtracking steps")]
    BacktrackOverflow(usize),

    #[error("curve evaluation carries no reusable factor")]
    MissingCache,

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_shape(
    expected: (usize, usize),
    got: (usize, usize),
) -> Result<()> {
    if expected != got {
        return Err(Error::ShapeMismatch { expected, got });
    }
    Ok(())
}
