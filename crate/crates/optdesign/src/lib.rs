//! Locally optimal experimental design for nonlinear prediction models.
//!
//! The crate builds one-point information matrices ("atoms") from parametric
//! models, evaluates and differentiates design criteria (D, A, Ψ_p, Ψ_{p,Q},
//! weighted-A, E, Ψ̃_p, two-stage wrappers), solves discretized design
//! problems with optimality certificates, runs four adaptive discretization
//! algorithms plus a vertex-direction baseline, and checks termination and
//! convergence-rate guarantees numerically.
//!
//! Module layout:
//! - [`matcone`]: dense symmetric-matrix utilities on the PSD cone,
//! - [`criteria`]: criterion evaluation, gradients, sensitivity functions,
//! - [`design_space`]: finite design spaces, designs, Carathéodory reduction,
//! - [`models`]: parametric models, Newton solver, RK4 integrator, atoms,
//! - [`weight_solver`]: simplex-constrained solver with certificates,
//! - [`adaptive`]: the four adaptive discretization algorithms,
//! - [`rates`]: convergence-rate constants, bounds, and diagnostics,
//! - [`config`] / [`cli`]: experiment configs and the batch driver.

pub mod adaptive;
pub mod cli;
pub mod config;
pub mod criteria;
pub mod design_space;
pub mod matcone;
pub mod models;
pub mod rates;
pub mod weight_solver;

pub use matcone::{SymMatrix, Spectrum};
