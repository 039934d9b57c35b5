use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// The requested grid exceeds the desk-scale cell cap.
    #[error("grid of 2^{log2_cells} cells exceeds the cap of 2^{cap} cells")]
    Resource { log2_cells: u64, cap: u32 },

    /// A parameter lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A geometric construction leaves the root cube.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// Malformed input (wrong grid, wrong length, bad value).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A supplied object failed validation (e.g. a kernel spec).
    #[error("validation failed: {0}")]
    Validation(String),

    /// The input makes the requested quantity undefined.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
