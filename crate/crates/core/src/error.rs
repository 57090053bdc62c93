use alloc::string::String;
use core::fmt;

/// Errors reported by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the documented domain of an operation.
    Argument(String),
    /// A numerical procedure failed to reach its tolerance.
    Numeric { what: String, residual: f64 },
    /// No point satisfies the constraints within the search horizon.
    Infeasible(String),
    /// A sufficient condition required by a solver does not hold.
    Hypothesis(String),
    /// The requested size exceeds what the implementation supports.
    Unsupported(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Argument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Numeric { what, residual } => {
                write!(f, "numerical failure in {what} (residual {residual:e})")
            }
            Error::Infeasible(msg) => write!(f, "infeasible: {msg}"),
            Error::Hypothesis(msg) => write!(f, "solver hypothesis violated: {msg}"),
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! arg_err {
    ($($t:tt)*) => { $crate::error::Error::Argument(alloc::format!($($t)*)) };
}
pub(crate) use arg_err;
