use std::fmt;

use rug::Rational;

/// Errors reported by the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A precondition on an argument does not hold.
    InvalidArgument(String),
    /// Text input could not be parsed.
    Parse { line: usize, message: String },
    /// A matrix entry differs from its mirror entry.
    NotSymmetric { row: usize, col: usize },
    /// A query point hit an exact zero of the polynomial.
    ExactRoot { point: Rational },
    /// The oracle produced values the iteration cannot step from.
    DegenerateOracle { point: Rational, reason: &'static str },
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Parse { line, message } => write!(f, "parse error on line {line}: {message}"),
            Error::NotSymmetric { row, col } => {
                write!(f, "matrix is not symmetric at entry ({row}, {col})")
            }
            Error::ExactRoot { point } => write!(f, "polynomial vanishes at query point {point}"),
            Error::DegenerateOracle { point, reason } => {
                write!(f, "degenerate oracle values at {point}: {reason}")
            }
            Error::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
