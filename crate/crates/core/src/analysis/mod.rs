//! Functionals, residual pairings and the error representation checks.

mod budget;
mod fit;
mod functional;
mod ibc;

pub use budget::{verify_error_representation, ErrorBudget};
pub use fit::{fit_convergence_rate, RateFit};
pub use functional::{
    flux_derivative_jump, flux_linearization_defect, functional_linearization_defect, functional_value, interior_bc_residual,
    internal_term, jump_chain, modified_functional, residual_pairing, residual_pairing_nodal, scalar_anchor_for_internal_term,
    target_jump, JumpChain, ResidualPairing, Solution, QUAD_TOL,
};
pub use ibc::{euler_ibc_check, viscous_ibc_residual, IbcReport, AREA_SLOPE_FLOOR};
