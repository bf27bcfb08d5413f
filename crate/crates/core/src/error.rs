use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("angle out of range: {name} = {value} rad (limit {limit} rad)")]
    AngleOutOfRange {
        name: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("integration did not converge: estimated error {estimated_error:e} exceeds tolerance {tolerance:e}")]
    IntegrationNonConvergence {
        value_re: f64,
        value_im: f64,
        estimated_error: f64,
        tolerance: f64,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("instance too large for exhaustive search: {combinations} combinations (limit {limit})")]
    InstanceTooLarge { combinations: f64, limit: f64 },

    #[error("signal stream too short: need more than {needed} samples, got {got}")]
    StreamTooShort { needed: usize, got: usize },

    #[error("result schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
