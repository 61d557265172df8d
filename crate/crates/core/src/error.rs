use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse grouping used by front ends to pick exit codes and HTTP statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Io,
    Config,
    Solver,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("nonpositive weight {weight} on edge ({i}, {j})")]
    NonpositiveWeight { i: usize, j: usize, weight: f64 },
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("vertex index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vertex {0} has zero degree")]
    ZeroDegree(usize),
    #[error("nonpositive balance weight {value} at vertex {index}")]
    NonpositiveBalance { index: usize, value: f64 },
    #[error("block {0} is empty")]
    EmptyBlock(usize),
    #[error("{name} = {value} is outside {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error(
        "eigensolver did not converge after {iterations} iterations (max residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("degenerate reweighting on edge ({i}, {j}): zero base with negative exponent")]
    DegenerateGamma { i: usize, j: usize },
    #[error("columns are not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("embedding violates its constraints (deviation {0:e})")]
    ConstraintViolation(f64),
    #[error("values are constant; no threshold separates them")]
    ConstantValues,
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("image error: {0}")]
    Image(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io(_) | Error::Image(_) => ErrorCategory::Io,
            Error::NoConvergence { .. } | Error::DegenerateGamma { .. } => ErrorCategory::Solver,
            _ => ErrorCategory::Config,
        }
    }

    pub(crate) fn domain(name: &'static str, value: f64, domain: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            domain,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<image::ImageError> for Error {
    fn from(e: image::ImageError) -> Self {
        match e {
            image::ImageError::IoError(io) => Error::Io(io.to_string()),
            other => Error::Image(other.to_string()),
        }
    }
}
