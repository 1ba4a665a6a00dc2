use thiserror::Error;

/// Errors produced by the discretization, regularization and experiment layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: a = {a} must be smaller than b = {b}")]
    InvalidDomain { a: f64, b: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid too small: need n_x >= 5 and n_y >= 3, got {nx} x {ny}")]
    GridTooSmall { nx: usize, ny: usize },

    #[error("index {index} out of range 0..{len} for {what}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("length mismatch for {what}: expected {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("case `{0}` has no exact solution")]
    MissingExact(String),

    #[error("ghost band of {ghost} layers cannot reflect into a grid axis of {len} nodes (need 2p < n)")]
    GhostBandTooDeep { ghost: usize, len: usize },

    #[error("kernel radius of {radius} nodes exceeds the ghost band of {ghost} layers")]
    KernelTooWide { radius: usize, ghost: usize },

    #[error("matrix is not symmetric: asymmetry {asymmetry:e} relative to norm {norm:e}")]
    NotSymmetric { asymmetry: f64, norm: f64 },

    #[error("Cholesky factorization failed: matrix is not numerically positive definite")]
    NotPositiveDefinite,

    #[error("direct solve residual {residual:e} exceeds {limit:e}")]
    InaccurateSolve { residual: f64, limit: f64 },

    #[error("system of size {size} exceeds the dense factorization guard of {limit}")]
    SizeGuard { size: usize, limit: usize },

    #[error("{0} has zero norm")]
    ZeroNorm(&'static str),

    #[error("parameter selection needs at least 2 solutions, got {0}")]
    TooFewSolutions(usize),

    #[error("y = {y} is not a grid level (spacing {dy})")]
    OffGrid { y: f64, dy: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            what,
            expected,
            actual,
        })
    }
}
