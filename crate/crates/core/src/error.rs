use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed call: mismatched shapes, order larger than the horizon, bad flags.
    #[error("usage error: {0}")]
    Usage(String),

    /// Negative, NaN or infinite data where nonnegative finite values are required.
    #[error("domain error: {0}")]
    Domain(String),

    /// `(T(h)U)_{ij} = 0` while `Y_{ij} > 0`; the objective is infinite at `h`.
    #[error("infeasible point: model output is zero at row {row}, column {col} where the data is positive")]
    Infeasible { row: usize, col: usize },

    /// Data that makes the multiplicative update undefined (zero column weight).
    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
