//! Value function, extraction policy and stopping boundary for finite-horizon
//! resource extraction when the commodity price follows a regime-switching
//! jump-diffusion.
//!
//! The pipeline is: build a [`model::ProblemSpec`], discretize its jump
//! measure with [`quadrature::build_quadrature`], solve the discrete
//! quasi-variational inequality with [`solver::solve`], read off decisions with
//! [`policy::extract_policy`], and cross-check against
//! [`montecarlo::estimate_value`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod policy;
pub mod quadrature;
pub mod solver;

pub use error::{ModelError, PolicyError, QuadratureError, SimulationError, SolverError};
pub use model::{
    eval_coefficients, eval_payoffs, oil_field_example, validate_problem, CoefficientModel, LevyMeasureSpec,
    PayoffSpec, ProblemSpec, RegimeGenerator, ValidationReport,
};
pub use policy::{extract_policy, PolicyField};
pub use quadrature::{build_quadrature, QuadratureSet};
pub use solver::{solve, Grid, SolveReport, SolverSettings, ValueField};
