//! Error representation budget for a perturbed discontinuous solution.

use super::functional::{internal_term, modified_functional, residual_pairing, Solution};
use crate::adjoint::AdjointField;
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::reference::PerturbationFamily;

/// Terms of `J(v) − J(w) = R(z, v) + ᾱ I(z, w) + defect`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBudget {
    pub nu: f64,
    pub alpha_bar: f64,
    /// `J(w)` with the flux jump weighted by `z(α)`.
    pub j_exact: f64,
    /// `J(v)` with the flux jump weighted by `z(α)`.
    pub j_approx: f64,
    /// Smooth part of `R(z, v)`.
    pub residual_term: f64,
    /// `z(β)^T [f(v)]`, reported but cancelled by the modified functional.
    pub singular_term: f64,
    pub internal_term: f64,
    pub defect: f64,
    /// The defect when the shift term `ᾱ I` is left out.
    pub defect_without_internal: f64,
}

impl ErrorBudget {
    pub const CSV_HEADER: &'static str =
        "nu,alpha_bar,j_exact,j_approx,residual_term,singular_term,internal_term,defect,defect_without_internal,effectivity";

    /// `R(z, v) / (J(v) − J(w))`.
    pub fn effectivity(&self) -> f64 {
        self.residual_term / (self.j_approx - self.j_exact)
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.nu,
            self.alpha_bar,
            self.j_exact,
            self.j_approx,
            self.residual_term,
            self.singular_term,
            self.internal_term,
            self.defect,
            self.defect_without_internal,
            self.effectivity()
        )
    }
}

/// Evaluates every term of the representation for `v` drawn from `fam`.
///
/// `z` must be continuous at the shock of `fam.base`; its value there weights the flux
/// jump in both functionals.
pub fn verify_error_representation(fam: &PerturbationFamily, z: &dyn AdjointField, model: &ModelSpec) -> Result<ErrorBudget> {
    let w = &fam.base;
    if z.dim() != w.dim() {
        return Err(Error::InvalidInput("adjoint and solution dimensions differ".into()));
    }
    let z_alpha = z.value(w.alpha());
    let j_exact = modified_functional(Solution::Piecewise(w), &z_alpha, model, None)?;
    let j_approx = modified_functional(Solution::Piecewise(&fam.v), &z_alpha, model, None)?;
    let pairing = residual_pairing(z, &fam.v, model)?;
    let internal = internal_term(&z_alpha, w, model)?;
    let gap = j_approx - j_exact;
    let defect_without_internal = gap - pairing.smooth;
    Ok(ErrorBudget {
        nu: fam.nu,
        alpha_bar: fam.alpha_bar,
        j_exact,
        j_approx,
        residual_term: pairing.smooth,
        singular_term: pairing.singular,
        internal_term: internal,
        defect: defect_without_internal - fam.alpha_bar * internal,
        defect_without_internal,
    })
}
