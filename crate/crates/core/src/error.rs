use thiserror::Error;

pub type Result<T> = std::result::Result<T, FmeError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FmeError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("product density of order {order} is not supported (maximum {max})")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("kernel with {0} points exceeds the subset-enumeration limit of 20")]
    TooManyPoints(usize),

    #[error("integral is not finite: {0}")]
    NonIntegrable(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after {evaluations} evaluations")]
    Quadrature {
        estimate: f64,
        error: f64,
        evaluations: usize,
    },

    #[error("error bound unavailable: {0}")]
    BoundUnavailable(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl FmeError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        FmeError::Config(msg.into())
    }
}
