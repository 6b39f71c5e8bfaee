use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum PamError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shape function is singular at the origin")]
    Singular,

    #[error("quadrature did not converge: value {value:e}, error estimate {abs_err:e}")]
    QuadratureNonConvergence { value: f64, abs_err: f64 },

    #[error("point {0:?} lies outside the evaluation region")]
    OutsideRegion(Vec<f64>),

    #[error("mass increased by {increase:e} at step {step} (t = {time})")]
    Instability { step: usize, time: f64, increase: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (best eigenvalue {eigenvalue}, residual {residual:e})")]
    EigenNonConvergence {
        iterations: usize,
        eigenvalue: f64,
        residual: f64,
        eigenvector: Vec<f64>,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, PamError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> PamError {
    PamError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
