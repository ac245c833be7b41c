use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A spec, distribution, or job parameter failed validation.
    #[error("configuration error: {0}")]
    Config(String),

    /// A lattice query fell outside an open-box window.
    #[error("point {point:?} (direction {direction}) is outside the window")]
    OutOfWindow { point: Vec<i64>, direction: String },

    /// A solver needed a torus window and got an open box, or vice versa.
    #[error("topology error: {0}")]
    Topology(String),

    /// A reachable set touched the window boundary, so the answer would be clipped.
    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    /// An iterative solver stopped before meeting its tolerance.
    #[error("solver did not converge: {0}")]
    NotConverged(String),

    /// A required precondition (e.g. a positive density floor) is not met.
    #[error("unavailable: {0}")]
    Unavailable(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Config(format!("csv: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
