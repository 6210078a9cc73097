use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("non-finite state at simulation step {step}")]
    NumericOverflow { step: usize },

    #[error("empty kernel neighborhood at x = {x} with bandwidth {h}")]
    EmptyNeighborhood { x: f64, h: f64 },

    #[error("degenerate variance estimate at design points {indices:?}")]
    DegenerateVariance { indices: Vec<usize> },

    #[error("internal consistency: {0}")]
    InternalConsistency(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing column: {0}")]
    MissingColumn(String),

    #[error("non-positive value {value} at row {row} (log transform needs positive values)")]
    NonPositive { row: usize, value: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("null table format: {0}")]
    NullTableFormat(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code reported by the command-line tool. Each variant has
    /// its own code; 1 and 2 are left to the runtime and argument parser.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) => 10,
            Error::InvalidSeries(_) => 11,
            Error::NumericOverflow { .. } => 12,
            Error::EmptyNeighborhood { .. } => 20,
            Error::DegenerateVariance { .. } => 21,
            Error::InternalConsistency(_) => 22,
            Error::Io { .. } => 30,
            Error::Parse { .. } => 31,
            Error::MissingColumn(_) => 32,
            Error::NonPositive { .. } => 33,
            Error::Config(_) => 40,
            Error::NullTableFormat(_) => 41,
        }
    }
}
