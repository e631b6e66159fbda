use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("unsupported quadrature order {0} (supported: 1..=16)")]
    QuadratureOrder(usize),

    #[error("invalid quadrature grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite integrand value at quadrature node {index}")]
    NonFiniteIntegrand { index: usize },

    #[error("time {t} outside the admissible range {range}")]
    TimeOutOfRange { t: f64, range: &'static str },

    #[error("overflow evaluating the penalty term at t = {t}")]
    Overflow { t: f64 },

    #[error("near-singular Jacobian at t = {t}")]
    NearSingular { t: f64 },

    #[error("invalid Runge-Kutta parameters: {0}")]
    InvalidTableau(String),

    #[error("invalid step size {0}: 1/dt must be a positive integer and dt <= 0.25")]
    InvalidStep(f64),

    #[error("snapshot time {0} does not lie on the step lattice")]
    SnapshotTime(f64),

    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("{solver} failed to converge: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
