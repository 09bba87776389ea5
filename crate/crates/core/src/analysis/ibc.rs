//! Viscous interior boundary condition diagnostics.

use crate::adjoint::AdjointSolution;
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::viscous::{smooth_jump_scalar, FieldSolution, TransitionRegion};

/// `|A'(x)|` below which `A/A'` is treated as undefined.
pub const AREA_SLOPE_FLOOR: f64 = 1e-8;

/// Both sides of the viscous interior-condition identity on one transition region.
#[derive(Debug, Clone, PartialEq)]
pub struct IbcReport {
    pub epsilon: f64,
    /// `[p(w)] − [z^T S(w)]` across the region.
    pub viscous_residual: f64,
    /// `−ε [z_x^T w_x]` across the region.
    pub endpoint_form: f64,
    /// `−∫ z^T ∂_x S dx` over the region; zero without geometry.
    pub source_x_term: f64,
    /// `|viscous_residual − endpoint_form − source_x_term|`.
    pub identity_gap: f64,
    /// `|z_2(α̂) + A(α̂)/A'(α̂)|` for the nozzle.
    pub euler_z2_gap: Option<f64>,
    /// Endpoint against integral form of the smooth jump of `p − z^T S`.
    pub jump_form_discrepancy: f64,
    pub theta: f64,
    pub region: TransitionRegion,
}

impl IbcReport {
    pub const CSV_HEADER: &'static str =
        "epsilon,alpha_minus,alpha_hat,alpha_plus,capped,viscous_residual,endpoint_form,source_x_term,identity_gap,euler_z2_gap";

    pub fn csv_row(&self) -> String {
        let z2 = self.euler_z2_gap.map(|g| format!("{g:.16e}")).unwrap_or_default();
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            self.epsilon,
            self.region.alpha_minus,
            self.region.alpha_hat,
            self.region.alpha_plus,
            self.region.capped,
            self.viscous_residual,
            self.endpoint_form,
            self.source_x_term,
            self.identity_gap,
            z2
        )
    }
}

fn central(v: &[f64], i: usize, h: f64) -> f64 {
    (v[i + 1] - v[i - 1]) / (2.0 * h)
}

/// Evaluates the interior condition on a converged primal and its adjoint.
pub fn viscous_ibc_residual(
    model: &ModelSpec,
    primal: &FieldSolution,
    adjoint: &AdjointSolution,
    region: &TransitionRegion,
) -> Result<IbcReport> {
    if primal.grid != adjoint.grid || primal.values.len() != adjoint.values.len() {
        return Err(Error::InvalidInput("primal and adjoint grids differ".into()));
    }
    let g = &primal.grid;
    let n = g.intervals();
    if region.i_minus == 0 || region.i_plus >= n {
        return Err(Error::InvalidInput("transition region touches the boundary".into()));
    }
    let d = model.dim();
    let h = g.h();
    let q = (0..=n)
        .map(|i| {
            let w = &primal.values[i];
            Ok(model.target(w)? - adjoint.values[i].dot(&model.source(g.x(i), w)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let jump = smooth_jump_scalar(primal, &q, region)?;

    let zc: Vec<Vec<f64>> = (0..d).map(|k| adjoint.component(k)).collect();
    let wc: Vec<Vec<f64>> = (0..d).map(|k| primal.component(k)).collect();
    let flux_grad = |i: usize| (0..d).map(|k| central(&zc[k], i, h) * central(&wc[k], i, h)).sum::<f64>();
    let endpoint_form = -primal.epsilon * (flux_grad(region.i_plus) - flux_grad(region.i_minus));

    let source_x_term = match model.geometry() {
        Some(_) => {
            let xs: Vec<f64> = (region.i_minus..=region.i_plus).map(|i| g.x(i)).collect();
            let ys = (region.i_minus..=region.i_plus)
                .map(|i| Ok(adjoint.values[i].dot(&model.source_x_derivative(g.x(i), &primal.values[i])?)))
                .collect::<Result<Vec<_>>>()?;
            -crate::quadrature::trapezoid(&xs, &ys)
        }
        None => 0.0,
    };
    let euler_z2_gap = match model.geometry() {
        Some(_) => Some(euler_ibc_check(model, adjoint, region)?.abs()),
        None => None,
    };
    let viscous_residual = jump.endpoint[0];
    Ok(IbcReport {
        epsilon: primal.epsilon,
        viscous_residual,
        endpoint_form,
        source_x_term,
        identity_gap: (viscous_residual - endpoint_form - source_x_term).abs(),
        euler_z2_gap,
        jump_form_discrepancy: jump.discrepancy(),
        theta: region.theta,
        region: *region,
    })
}

/// `z_2(α̂) + A(α̂)/A'(α̂)`.
pub fn euler_ibc_check(model: &ModelSpec, adjoint: &AdjointSolution, region: &TransitionRegion) -> Result<f64> {
    let geom = model
        .geometry()
        .ok_or_else(|| Error::InvalidInput("the momentum-adjoint check needs a nozzle geometry".into()))?;
    if model.dim() != 3 {
        return Err(Error::InvalidInput("the momentum-adjoint check needs the Euler model".into()));
    }
    let a = region.alpha_hat;
    let slope = geom.area_derivative(a);
    if slope.abs() < AREA_SLOPE_FLOOR {
        return Err(Error::InvalidInput(format!("A'(α̂) = {slope:e} is too small to form A/A'")));
    }
    Ok(adjoint.values[region.i_hat][1] + geom.area(a) / slope)
}
