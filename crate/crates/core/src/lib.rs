//! Robust model predictive control with adjustable uncertainty sets.
//!
//! The crate treats disturbance containment sets as decision variables of the
//! optimal control problem: candidate uncertainty sets are affine images
//! `Y S + y_off` of a fixed primitive polytope `S`, inputs follow an affine
//! disturbance feedback policy, and the resulting robust problem is dualized
//! into one finite-dimensional linear program. Terminal sets that make the
//! receding-horizon loop recursively feasible are computed as fixed points
//! over the state augmented with the uncertainty parameters.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root pin the `f64` instantiations used by the CLI.

pub mod geometry;
pub mod invariant;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod mpc;
pub mod problem;
pub mod scalar;

pub use scalar::{scalar, Scalar};

/// `f64` instantiations of the core types.
pub type Mat = linalg::Mat<f64>;
pub type LinearProgram = lp::LinearProgram<f64>;
pub type LpSolution = lp::LpSolution<f64>;
pub type HPolytope = geometry::HPolytope<f64>;
pub type VPolytope = geometry::VPolytope<f64>;
pub type UncertainLtiSystem = model::UncertainLtiSystem<f64>;
pub type UncertaintyParametrization = model::UncertaintyParametrization<f64>;
pub type ProblemInstance = problem::ProblemInstance<f64>;
pub type InvariantSetResult = invariant::InvariantSetResult<f64>;
pub type RmpcSolution = mpc::RmpcSolution<f64>;
