use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The retained probability mass of a truncated state fell below `1 - budget`.
    #[error("truncation budget exceeded: retained norm {retained:.3e} < 1 - {budget:.1e}; raise the cutoff (currently {cutoff})")]
    Truncation {
        retained: f64,
        budget: f64,
        cutoff: usize,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Roundoff produced a value that cannot be explained by floating-point noise.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("quadrature did not stabilise: doubling to {nodes} nodes still changed moments by {change:.3e} (limit {tolerance:.1e})")]
    Quadrature {
        nodes: usize,
        change: f64,
        tolerance: f64,
    },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
