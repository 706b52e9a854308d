use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Errors raised by the solver and its oracles.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector or matrix had the wrong length for the problem it was used with.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// An argument violated its documented precondition.
    InvalidArgument(String),
    /// The inner solver ran out of iterations before reaching its tolerance.
    InnerBudget {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },
    /// The μ-backtracking loop needed more increases than allowed.
    BacktrackBudget { backtracks: usize, mu: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { what, expected, found } => {
                write!(f, "dimension mismatch for {what}: expected {expected}, found {found}")
            }
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::InnerBudget { iterations, residual, .. } => write!(
                f,
                "inner solver exhausted {iterations} iterations (residual {residual:e})"
            ),
            Error::BacktrackBudget { backtracks, mu } => {
                write!(f, "backtracking exceeded {backtracks} increases (mu = {mu:e})")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, found })
    }
}
