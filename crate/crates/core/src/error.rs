use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("newton iteration diverged at t = {time}: residual {residual:.3e} after dt reduced to {dt:.3e}")]
    NewtonDivergence { time: f64, dt: f64, residual: f64 },

    #[error("positivity lost at t = {time} (node {node})")]
    PositivityLoss { time: f64, node: usize },

    #[error("no admissible subsolution constants: {0}")]
    InfeasibleWindow(String),

    #[error("geometry requires {0}")]
    GeometryRequirement(String),

    #[error("unstable fit at the {end} end: local exponent spread {spread:.3} exceeds {limit}")]
    FitUnstable {
        end: &'static str,
        spread: f64,
        limit: f64,
    },

    #[error("i/o: {0}")]
    Io(String),
}

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

pub type Result<T> = std::result::Result<T, Error>;
