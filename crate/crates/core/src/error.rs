use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid phase law: {0}")]
    InvalidLaw(String),
    #[error("invalid operator coefficients: {0}")]
    InvalidCoefficients(String),
    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),
    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),
    #[error("invalid fluid parameters: {0}")]
    InvalidFluid(String),
    #[error("field does not live on the operator grid")]
    GridMismatch,
    #[error("regularization parameter must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("nonlinear solve did not converge: residual {} after {} iterations", .0.residual, .0.iterations)]
    NonConvergence(Box<NonConvergence>),
    #[error("oracle hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("oracle evaluated outside its validity window at x = {x}, t = {t}")]
    OutsideValidity { x: f64, t: f64 },
}

/// Best iterate handed back when the stationary solver exhausts its budget.
#[derive(Debug, Clone, PartialEq)]
pub struct NonConvergence {
    pub u: Vec<f64>,
    pub chi: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

pub type Result<T> = core::result::Result<T, Error>;
