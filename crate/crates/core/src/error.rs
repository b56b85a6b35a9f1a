use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("operation requires a {expected}D grid, got {actual}D")]
    Dimension { expected: usize, actual: usize },

    #[error("poisson solve did not converge: {iterations} iterations, relative residual {residual:.3e}")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("poisson solve diverged at iteration {iterations}")]
    Diverged { iterations: usize },

    #[error("unknown scene '{name}' (available: {available})")]
    UnknownScene { name: String, available: String },

    #[error("malformed dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
