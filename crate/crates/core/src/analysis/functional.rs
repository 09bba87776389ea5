//! Target functional, residual pairing, internal term and the linearization defects.

use crate::adjoint::AdjointField;
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::quadrature::{integrate, trapezoid};
use crate::reference::{PerturbationFamily, PiecewiseSolution, Side};
use crate::state::State;
use crate::viscous::{smooth_jump, FieldSolution, TransitionRegion};

/// Absolute tolerance for quadrature of piecewise-smooth integrands.
pub const QUAD_TOL: f64 = 1e-13;

/// A solution given either branch-wise or by nodal samples.
#[derive(Debug, Clone, Copy)]
pub enum Solution<'a> {
    Piecewise(&'a PiecewiseSolution),
    Nodal(&'a FieldSolution),
}

impl<'a> From<&'a PiecewiseSolution> for Solution<'a> {
    fn from(w: &'a PiecewiseSolution) -> Self {
        Solution::Piecewise(w)
    }
}

impl<'a> From<&'a FieldSolution> for Solution<'a> {
    fn from(w: &'a FieldSolution) -> Self {
        Solution::Nodal(w)
    }
}

fn quad(f: impl FnMut(f64) -> f64, a: f64, b: f64, breaks: &[f64]) -> Result<f64> {
    integrate(f, a, b, breaks, QUAD_TOL, 1e-14)
}

/// Integral of a branch-wise scalar function over `[0, 1]`, split at the shock.
fn integrate_piecewise(w: &PiecewiseSolution, extra_breaks: &[f64], mut f: impl FnMut(f64, Side) -> Result<f64>) -> Result<f64> {
    let a = w.alpha();
    let mut err = None;
    let mut total = 0.0;
    for (side, lo, hi) in [(Side::Left, 0.0, a), (Side::Right, a, 1.0)] {
        total += quad(
            |x| {
                f(x, side).unwrap_or_else(|e| {
                    err.get_or_insert(e);
                    0.0
                })
            },
            lo,
            hi,
            extra_breaks,
        )?;
    }
    match err {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// `Ĵ(w) = ∫ p(w) dx`: adaptive quadrature per branch, or the trapezoid rule on nodes.
pub fn functional_value(w: Solution<'_>, model: &ModelSpec) -> Result<f64> {
    match w {
        Solution::Piecewise(w) => integrate_piecewise(w, &[], |x, side| {
            let s = w.eval_side(x, side);
            model.check_admissible(&s)?;
            model.target(&s)
        }),
        Solution::Nodal(sol) => {
            let p = sol
                .values
                .iter()
                .map(|s| {
                    model.check_admissible(s)?;
                    model.target(s)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(trapezoid(&sol.grid.nodes(), &p))
        }
    }
}

/// `J(w) = Ĵ(w) − z_α^T [f(w)]`. Nodal solutions take the flux jump across `region`.
pub fn modified_functional(
    w: Solution<'_>,
    z_alpha: &State,
    model: &ModelSpec,
    region: Option<&TransitionRegion>,
) -> Result<f64> {
    let jhat = functional_value(w, model)?;
    let jump = match w {
        Solution::Piecewise(w) => model.flux(&w.w_plus())? - model.flux(&w.w_minus())?,
        Solution::Nodal(sol) => {
            let region = region.ok_or_else(|| Error::InvalidInput("nodal solution needs a transition region".into()))?;
            let f = sol.values.iter().map(|s| model.flux(s)).collect::<Result<Vec<_>>>()?;
            smooth_jump(sol, &f, region)?.endpoint
        }
    };
    Ok(jhat - z_alpha.dot(&jump))
}

/// Smooth and shock parts of `R(z, v) = ∫ z^T (f(v)_x + S(v)) dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualPairing {
    /// Integral of `z^T r(v)` away from the shock.
    pub smooth: f64,
    /// `z(β)^T [f(v)]`, the distributional contribution of the jump.
    pub singular: f64,
}

impl ResidualPairing {
    pub fn total(&self) -> f64 {
        self.smooth + self.singular
    }
}

/// Pairing against a piecewise `v`; the smooth part uses adaptive quadrature on both
/// sides of `v`'s shock, split further at the kinks of `z`.
pub fn residual_pairing(z: &dyn AdjointField, v: &PiecewiseSolution, model: &ModelSpec) -> Result<ResidualPairing> {
    if z.dim() != v.dim() {
        return Err(Error::InvalidInput("adjoint and solution dimensions differ".into()));
    }
    let breaks = z.kinks();
    let smooth = integrate_piecewise(v, &breaks, |y, side| {
        let r = model.smooth_residual(y, &v.eval_side(y, side), &v.derivative_side(y, side))?;
        Ok(z.value(y).dot(&r))
    })?;
    let jump = model.flux(&v.w_plus())? - model.flux(&v.w_minus())?;
    Ok(ResidualPairing { smooth, singular: z.value(v.alpha()).dot(&jump) })
}

/// Pairing against a nodal `v`: trapezoid over nodes outside a `2h` window around the
/// steepest node, with the flux jump across the window as the singular part.
pub fn residual_pairing_nodal(z: &dyn AdjointField, v: &FieldSolution, model: &ModelSpec, alpha_hat: f64) -> Result<ResidualPairing> {
    let g = &v.grid;
    let n = g.intervals();
    let h = g.h();
    let f = v.values.iter().map(|s| model.flux(s)).collect::<Result<Vec<_>>>()?;
    let (ic, _) = g.locate(alpha_hat);
    let ic = ic.clamp(2, n - 2);
    let (lo, hi) = (ic - 1, ic + 1);
    let mut smooth = 0.0;
    for i in 1..n {
        if i >= lo && i <= hi {
            continue;
        }
        let x = g.x(i);
        let r = (f[i + 1] - f[i - 1]) * (0.5 / h) + model.source(x, &v.values[i])?;
        let weight = if i + 1 == lo || i == hi + 1 { 0.5 * h } else { h };
        smooth += weight * z.value(x).dot(&r);
    }
    let singular = z.value(g.x(ic)).dot(&(f[hi] - f[lo]));
    Ok(ResidualPairing { smooth, singular })
}

/// `[f(w)_x] = f'(w⁺) w_x(α⁺) − f'(w⁻) w_x(α⁻)` from the analytic branch derivatives.
pub fn flux_derivative_jump(w: &PiecewiseSolution, model: &ModelSpec) -> Result<State> {
    let (dl, dr) = w.one_sided_derivatives();
    Ok(model.flux_jacobian(&w.w_plus())?.mul_vec(&dr) - model.flux_jacobian(&w.w_minus())?.mul_vec(&dl))
}

/// `[p(w)] = p(w⁺) − p(w⁻)`.
pub fn target_jump(w: &PiecewiseSolution, model: &ModelSpec) -> Result<f64> {
    Ok(model.target(&w.w_plus())? - model.target(&w.w_minus())?)
}

/// `I(z, w) = −z(α)^T [f(w)_x] − [p(w)]`.
pub fn internal_term(z_alpha: &State, w: &PiecewiseSolution, model: &ModelSpec) -> Result<f64> {
    Ok(-z_alpha.dot(&flux_derivative_jump(w, model)?) - target_jump(w, model)?)
}

/// `z(α)^T [f(w)_x] + [p(w)]`; zero iff `z` satisfies the interior boundary condition.
pub fn interior_bc_residual(z_alpha: &State, w: &PiecewiseSolution, model: &ModelSpec) -> Result<f64> {
    Ok(z_alpha.dot(&flux_derivative_jump(w, model)?) + target_jump(w, model)?)
}

/// Scalar `z(α)` for which `I(z, w)` equals `internal`.
pub fn scalar_anchor_for_internal_term(w: &PiecewiseSolution, model: &ModelSpec, internal: f64) -> Result<f64> {
    if model.dim() != 1 {
        return Err(Error::InvalidInput("scalar models only".into()));
    }
    let fx = flux_derivative_jump(w, model)?[0];
    if fx == 0.0 {
        return Err(Error::InvalidInput("[f(w)_x] vanishes; the interior condition does not fix z(α)".into()));
    }
    Ok((-target_jump(w, model)? - internal) / fx)
}

/// `|[f(v)] − [f'(w) w̄] − ᾱ [f(w)_x]|` (max norm), with `w̄ = v − w` taken on the
/// right branches at `max(α, β)` and on the left branches at `min(α, β)`.
pub fn flux_linearization_defect(fam: &PerturbationFamily, model: &ModelSpec) -> Result<f64> {
    let (w, v) = (&fam.base, &fam.v);
    let lo = fam.alpha().min(fam.beta());
    let hi = fam.alpha().max(fam.beta());
    let fv = model.flux(&v.w_plus())? - model.flux(&v.w_minus())?;
    let wr = w.eval_side(hi, Side::Right);
    let vr = v.eval_side(hi, Side::Right);
    let wl = w.eval_side(lo, Side::Left);
    let vl = v.eval_side(lo, Side::Left);
    let lin = model.flux_jacobian(&wr)?.mul_vec(&(vr - wr)) - model.flux_jacobian(&wl)?.mul_vec(&(vl - wl));
    let shift = flux_derivative_jump(w, model)? * fam.alpha_bar;
    Ok((fv - lin - shift).norm_inf())
}

/// `|Ĵ(v) − Ĵ(w) − ∫_{Ω∖[α,β]} p'(w)(v − w) dx + ᾱ[p(w)]|`.
pub fn functional_linearization_defect(fam: &PerturbationFamily, model: &ModelSpec) -> Result<f64> {
    let (w, v) = (&fam.base, &fam.v);
    let lo = fam.alpha().min(fam.beta());
    let hi = fam.alpha().max(fam.beta());
    let jv = functional_value(Solution::Piecewise(v), model)?;
    let jw = functional_value(Solution::Piecewise(w), model)?;
    let mut err = None;
    let mut lin = |x: f64| -> f64 {
        let run = || -> Result<f64> {
            let wx = w.eval(x);
            Ok(model.target_gradient(&wx)?.dot(&(v.eval(x) - wx)))
        };
        run().unwrap_or_else(|e| {
            err.get_or_insert(e);
            0.0
        })
    };
    let outside = quad(&mut lin, 0.0, lo, &[])? + quad(&mut lin, hi, 1.0, &[])?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok((jv - jw - outside + fam.alpha_bar * target_jump(w, model)?).abs())
}

/// Jump identities of an exact Euler solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpChain {
    /// `[f(w)_x] + [S(w)]`.
    pub flux_source_balance: State,
    /// `[S(w)]`.
    pub source_jump: State,
    /// `[ρu²] + [p]`.
    pub momentum_pressure_balance: f64,
}

pub fn jump_chain(w: &PiecewiseSolution, model: &ModelSpec) -> Result<JumpChain> {
    let a = w.alpha();
    let (wm, wp) = (w.w_minus(), w.w_plus());
    let source_jump = model.source(a, &wp)? - model.source(a, &wm)?;
    let flux_source_balance = flux_derivative_jump(w, model)? + source_jump;
    let params = model
        .euler_params()
        .ok_or_else(|| Error::InvalidInput("jump chain is defined for the Euler model".into()))?;
    let rhou2 = |s: &State| s[1] * s[1] / s[0];
    let p = |s: &State| crate::models::euler::euler_pressure(s, params);
    let momentum_pressure_balance = rhou2(&wp) - rhou2(&wm) + p(&wp)? - p(&wm)?;
    Ok(JumpChain { flux_source_balance, source_jump, momentum_pressure_balance })
}
