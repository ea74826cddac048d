use thiserror::Error;

use crate::rank1::EndBehavior;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Root finding or bracketing failed.
    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("step size underflow at t = {location}")]
    StepUnderflow { location: f64 },

    #[error("step limit reached at t = {location}")]
    MaxSteps { location: f64 },

    #[error("unclassified endpoint pair ({left:?}, {right:?})")]
    Unclassified { left: EndBehavior, right: EndBehavior },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl LabError {
    /// True for errors caused by the caller's input rather than by the numerics.
    pub fn is_domain(&self) -> bool {
        matches!(self, LabError::Domain(_) | LabError::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
