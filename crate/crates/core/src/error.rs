use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside the range where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two inputs that must agree in shape do not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Input that can only arise from corrupted upstream data (for example a zero-norm vector).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// An iterative procedure ran out of budget; `best` carries the best objective reached.
    #[error("iteration cap of {cap} exceeded (best objective so far {best})")]
    IterationCap { cap: usize, best: f64 },

    /// A numerical procedure failed to reach its accuracy target.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
