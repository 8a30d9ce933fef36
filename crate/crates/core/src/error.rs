use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid size {size} on axis {axis} must be a power of two and at least 4")]
    InvalidGridSize { axis: usize, size: usize },

    #[error("expected {expected} samples for the grid shape, got {actual}")]
    SampleCount { expected: usize, actual: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("band limit violated on axis {axis}: {size} samples cannot resolve |k| = {max_freq}")]
    BandLimitViolation { axis: usize, size: usize, max_freq: u64 },

    #[error("coefficient at {freq:?} is exactly zero")]
    ZeroCoefficient { freq: Vec<i64> },

    #[error("duplicate frequency {freq:?}")]
    DuplicateFrequency { freq: Vec<i64> },

    #[error("exponent out of domain: {0}")]
    Domain(String),

    #[error("function is identically zero")]
    ZeroFunction,

    #[error("parameters fall outside every supported regime: {0}")]
    Unsupported(String),

    #[error("empty budget window: n = {n}, alpha = {alpha}")]
    EmptyRange { n: u32, alpha: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degree violation: |k| = {max_freq} exceeds n = {degree} on axis {axis}")]
    DegreeViolation { axis: usize, max_freq: u64, degree: u64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
