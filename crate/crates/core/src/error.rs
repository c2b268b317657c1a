use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A point with colatitude outside the open interval (0, π).
    #[error("colatitude {0} outside the pole-free chart (0, pi)")]
    PoleExcluded(f64),

    #[error("coincident points: kernel is singular at separation {0:e}")]
    Singular(f64),

    #[error("point leaves the chart: {0}")]
    OutOfChart(String),

    #[error("separation {separation} exceeds the regular-part cap radius {cap}")]
    OutOfCap { separation: f64, cap: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("tolerance not met: {0}")]
    Tolerance(String),

    #[error("bracket failure: {0}")]
    Bracket(String),

    #[error("ansatz inconsistency: {0}")]
    Inconsistent(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
