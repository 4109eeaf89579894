use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("evaluation on the diagonal x = y is not defined")]
    DiagonalEvaluation,

    #[error("lattice mismatch: operands live on different lattices")]
    LatticeMismatch,

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("quadrature did not stabilize within the refinement budget: {0}")]
    QuadratureDivergence(String),

    #[error("iteration cap reached before tolerance {tol} (residual {residual})")]
    IterationCap { tol: f64, residual: f64 },

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse failure: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}
