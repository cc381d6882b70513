use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} below -{tolerance:e}")]
    NotPsd { eigenvalue: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dim { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("density undefined for a singular component (component {component})")]
    SingularDensity { component: usize },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("infeasible marginals: {0}")]
    InfeasibleMarginals(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
