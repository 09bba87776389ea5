//! Adjoint-based error estimation for one-dimensional steady balance laws with shocks.
//!
//! The crate provides the model laws, exact shocked reference solutions and their
//! perturbations, viscous primal and adjoint solvers, and the functional and
//! interior-boundary-condition analysis built on top of them.

// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adjoint;
pub mod analysis;
pub mod banded;
pub mod error;
pub mod models;
pub mod ode;
pub mod quadrature;
pub mod reference;
pub mod state;
pub mod viscous;

pub use error::{Error, Result};
pub use models::{euler_model, scalar_model, ModelSpec};
pub use state::{Matrix, State};
