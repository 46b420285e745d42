use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Which operand of a similarity computation failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operand {
    Query,
    NormalMean,
    RosaceaMean,
    Left,
    Right,
}

impl std::fmt::Display for Operand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Operand::Query => "query vector",
            Operand::NormalMean => "normal class mean",
            Operand::RosaceaMean => "rosacea class mean",
            Operand::Left => "left operand",
            Operand::Right => "right operand",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample set")]
    EmptySampleSet,
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max deviation {0:e})")]
    NotSymmetric(f64),
    #[error("eigensolver failed to converge after {0} iterations")]
    NoConvergence(usize),
    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NegativeEigenvalue(f64),
    #[error("degenerate data (zero variance)")]
    Degenerate,
    #[error("vector in whitened null space ({0})")]
    WhitenedNullSpace(Operand),
    #[error("zero vector has no direction ({0})")]
    ZeroVector(Operand),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn input(path: impl Into<PathBuf>, msg: impl ToString) -> Self {
        Error::Input {
            path: path.into(),
            message: msg.to_string(),
        }
    }
}
