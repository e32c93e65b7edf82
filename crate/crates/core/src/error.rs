use std::path::PathBuf;

use thiserror::Error;

use crate::problem::SparseSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("column {0} has zero norm")]
    ZeroColumn(usize),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("weight {index} is not strictly positive ({value})")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("baseline time must be positive, got {0}")]
    NonPositiveBaseline(f64),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    /// The coordinate-descent solver ran out of sweeps. Carries the best
    /// iterate so callers can decide whether it is good enough.
    #[error("solver did not reach the gap tolerance in {sweeps} sweeps (gap {gap:.3e})")]
    NotConverged {
        sweeps: usize,
        gap: f64,
        best: Box<SparseSolution>,
    },

    #[error("response vector is zero")]
    DegenerateResponse,

    #[error("sphere radius is zero; use the exact dual test")]
    RadiusZero,

    #[error("no half-space cuts the sphere")]
    NoUsefulPlane,

    #[error("no admissible second half-space")]
    NoSecondPlane,

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("covariance factorization failed (matrix not numerically positive definite)")]
    FactorizationFailure,

    #[error("every class has zero accumulated weight")]
    Undecidable,

    #[error("empty {0} set")]
    EmptySet(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("bad magic number {found:#010x} (expected {expected:#010x})")]
    BadMagic { expected: u32, found: u32 },

    #[error("file truncated: {0}")]
    TruncatedFile(String),

    #[error("malformed line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("index out of range on line {line}: {reason}")]
    IndexOutOfRange { line: usize, reason: String },

    #[error("nothing to emit")]
    EmptyInput,

    #[error("config error: {0}")]
    Config(String),

    #[error("plot error: {0}")]
    Plot(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable short name, used by the CLI's machine-readable error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ZeroColumn(_) => "ZeroColumn",
            Error::InvalidProblem(_) => "InvalidProblem",
            Error::NonPositiveWeight { .. } => "NonPositiveWeight",
            Error::NonPositiveBaseline(_) => "NonPositiveBaseline",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::NotConverged { .. } => "NotConverged",
            Error::DegenerateResponse => "DegenerateResponse",
            Error::RadiusZero => "RadiusZero",
            Error::NoUsefulPlane => "NoUsefulPlane",
            Error::NoSecondPlane => "NoSecondPlane",
            Error::DomainError(_) => "DomainError",
            Error::FactorizationFailure => "FactorizationFailure",
            Error::Undecidable => "Undecidable",
            Error::EmptySet(_) => "EmptySet",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::BadMagic { .. } => "BadMagic",
            Error::TruncatedFile(_) => "TruncatedFile",
            Error::MalformedLine { .. } => "MalformedLine",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::EmptyInput => "EmptyInput",
            Error::Config(_) => "Config",
            Error::Plot(_) => "Plot",
            Error::Io { .. } => "IoError",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
