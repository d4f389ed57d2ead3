use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("regime index {regime} out of range (problem has {regimes} regimes)")]
    RegimeOutOfRange { regime: usize, regimes: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature spacing must be positive and finite, got {0}")]
    NonPositiveSpacing(f64),
}

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error(
        "contraction precondition violated: |sum(c_j)/r - Gamma/r| = {bound} >= 1; shrink the quadrature spacing"
    )]
    ContractionViolation { bound: f64 },
    #[error("negative neighbour weight {weight} at slice {slice}, node {node}, control {control}")]
    NonMonotoneStencil {
        slice: usize,
        node: usize,
        control: f64,
        weight: f64,
    },
    #[error("slice {slice} did not reach tolerance within {max_iter} iterations (residual {residual})")]
    IterationLimit {
        slice: usize,
        max_iter: usize,
        residual: f64,
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("switching criterion requires mining-linear payoff and exponential-Lévy coefficients")]
    WrongFamily,
    #[error("switching criterion is undefined when the maximum rate is zero or the reserve is empty")]
    DegenerateControl,
}

#[derive(Debug, Error, PartialEq)]
pub enum SimulationError {
    #[error("at least 2 paths are required, got {0}")]
    TooFewPaths(usize),
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("initial state must satisfy x >= 0 and y >= 0")]
    InvalidInitialState,
}
