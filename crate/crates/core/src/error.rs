use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("incompatible samples: sizes {left} and {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("degenerate grid [{lo}, {hi}] with {points} points")]
    DegenerateGrid { lo: f64, hi: f64, points: usize },
    #[error("invalid distribution table: {0}")]
    InvalidTable(String),
    #[error("level {0} outside (0, 1)")]
    LevelOutOfRange(f64),
    #[error("argument {value} outside [0, 1]")]
    OutOfUnitInterval { value: f64 },
    #[error("invalid step function: {0}")]
    InvalidStepFn(String),
    #[error("duplicate knot at {0}")]
    DuplicateKnot(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid [{lo}, {hi}] does not cover the data range padded to [{need_lo}, {need_hi}]")]
    GridTooNarrow {
        lo: f64,
        hi: f64,
        need_lo: f64,
        need_hi: f64,
    },
    #[error("sigma rule {rule} is not valid at n = {n}: {reason}")]
    InvalidSigmaRule {
        rule: String,
        n: usize,
        reason: String,
    },
    #[error("risk {kind} is not defined for problem {problem}")]
    IncompatibleRisk { problem: String, kind: String },
    #[error("nonpositive value {0} in log-log fit")]
    NonPositive(f64),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
