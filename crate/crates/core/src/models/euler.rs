//! Quasi-one-dimensional Euler equations for nozzle flow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Matrix, State};

/// States with density or pressure at or below this value are nonphysical.
pub const ADMISSIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerParams {
    pub gamma: f64,
    /// Entropy scale: `s = alpha0·ln(p/ρ^γ) + alpha1`.
    pub alpha0: f64,
    pub alpha1: f64,
}

impl Default for EulerParams {
    fn default() -> Self {
        Self { gamma: 1.4, alpha0: 1.0, alpha1: 0.0 }
    }
}

impl EulerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidInput(format!("gamma must exceed 1, got {}", self.gamma)));
        }
        if !(self.alpha0.is_finite() && self.alpha1.is_finite()) {
            return Err(Error::InvalidInput("entropy constants must be finite".into()));
        }
        Ok(())
    }
}

/// Nozzle with area `A(x) = throat_area + curvature·(x − throat)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NozzleGeometry {
    pub throat: f64,
    pub throat_area: f64,
    pub curvature: f64,
}

impl Default for NozzleGeometry {
    fn default() -> Self {
        Self { throat: 0.5, throat_area: 1.0, curvature: 0.8 }
    }
}

impl NozzleGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.throat_area > 0.0) || !(self.curvature > 0.0) {
            return Err(Error::InvalidInput("nozzle needs positive throat area and curvature".into()));
        }
        if !(self.throat > 0.0 && self.throat < 1.0) {
            return Err(Error::InvalidInput(format!("throat {} must lie in (0, 1)", self.throat)));
        }
        Ok(())
    }

    #[inline]
    pub fn area(&self, x: f64) -> f64 {
        let d = x - self.throat;
        self.throat_area + self.curvature * d * d
    }

    #[inline]
    pub fn area_derivative(&self, x: f64) -> f64 {
        2.0 * self.curvature * (x - self.throat)
    }

    #[inline]
    pub fn area_second_derivative(&self, _x: f64) -> f64 {
        2.0 * self.curvature
    }

    /// `A'/A`, the logarithmic area derivative that scales the source.
    #[inline]
    pub fn log_area_derivative(&self, x: f64) -> f64 {
        self.area_derivative(x) / self.area(x)
    }

    /// d/dx of `A'/A`.
    #[inline]
    pub fn log_area_second_derivative(&self, x: f64) -> f64 {
        let a = self.area(x);
        let da = self.area_derivative(x);
        (self.area_second_derivative(x) * a - da * da) / (a * a)
    }
}

/// Outflow pressure `p0`, inflow entropy `s0` and inflow total enthalpy `h0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerBoundary {
    pub p0: f64,
    pub s0: f64,
    pub h0: f64,
}

impl Default for EulerBoundary {
    fn default() -> Self {
        Self { p0: 0.77, s0: 0.0, h0: 3.5 }
    }
}

fn check_density(w: &State) -> Result<()> {
    if w.dim() != 3 {
        return Err(Error::InvalidInput(format!("Euler state needs 3 components, got {}", w.dim())));
    }
    if !(w[0] > ADMISSIBILITY_TOL) {
        return Err(Error::Domain { component: "density", value: w[0] });
    }
    Ok(())
}

pub fn euler_pressure(w: &State, params: &EulerParams) -> Result<f64> {
    check_density(w)?;
    Ok((params.gamma - 1.0) * (w[2] - 0.5 * w[1] * w[1] / w[0]))
}

/// Pressure that must also be admissible.
pub fn euler_positive_pressure(w: &State, params: &EulerParams) -> Result<f64> {
    let p = euler_pressure(w, params)?;
    if !(p > ADMISSIBILITY_TOL) {
        return Err(Error::Domain { component: "pressure", value: p });
    }
    Ok(p)
}

pub fn euler_flux(w: &State, params: &EulerParams) -> Result<State> {
    let p = euler_pressure(w, params)?;
    let u = w[1] / w[0];
    Ok(State::from_slice(&[w[1], w[1] * u + p, u * (w[2] + p)]))
}

pub fn euler_flux_jacobian(w: &State, params: &EulerParams) -> Result<Matrix> {
    let p = euler_pressure(w, params)?;
    let g = params.gamma;
    let u = w[1] / w[0];
    let hh = (w[2] + p) / w[0];
    Ok(Matrix::from_rows(&[
        &[0.0, 1.0, 0.0],
        &[0.5 * (g - 3.0) * u * u, (3.0 - g) * u, g - 1.0],
        &[u * (0.5 * (g - 1.0) * u * u - hh), hh - (g - 1.0) * u * u, g * u],
    ]))
}

/// Gradient of pressure with respect to the conserved variables.
pub fn euler_pressure_gradient(w: &State, params: &EulerParams) -> Result<State> {
    check_density(w)?;
    let u = w[1] / w[0];
    let gm = params.gamma - 1.0;
    Ok(State::from_slice(&[gm * 0.5 * u * u, -gm * u, gm]))
}

/// The bracketed part of the source, `(ρu, ρu², u(E+p))`, without the area factor.
fn source_core(w: &State, params: &EulerParams) -> Result<State> {
    let mut f = euler_flux(w, params)?;
    f[1] -= euler_pressure(w, params)?;
    Ok(f)
}

fn source_core_jacobian(w: &State, params: &EulerParams) -> Result<Matrix> {
    let mut j = euler_flux_jacobian(w, params)?;
    let gp = euler_pressure_gradient(w, params)?;
    let r = j.row(1) - gp;
    j.set_row(1, &r);
    Ok(j)
}

pub fn euler_source(x: f64, w: &State, geom: &NozzleGeometry, params: &EulerParams) -> Result<State> {
    Ok(source_core(w, params)? * geom.log_area_derivative(x))
}

pub fn euler_source_jacobian(x: f64, w: &State, geom: &NozzleGeometry, params: &EulerParams) -> Result<Matrix> {
    Ok(source_core_jacobian(w, params)?.scale(geom.log_area_derivative(x)))
}

/// Partial derivative of the source with respect to the explicit `x`.
pub fn euler_source_x_derivative(x: f64, w: &State, geom: &NozzleGeometry, params: &EulerParams) -> Result<State> {
    Ok(source_core(w, params)? * geom.log_area_second_derivative(x))
}

/// Entropy `s = α0·ln(p/ρ^γ) + α1` and total enthalpy `h = c²/(γ−1) + u²/2`.
pub fn euler_entropy_enthalpy(w: &State, params: &EulerParams) -> Result<(f64, f64)> {
    let p = euler_positive_pressure(w, params)?;
    let g = params.gamma;
    let rho = w[0];
    let u = w[1] / rho;
    let s = params.alpha0 * (p.ln() - g * rho.ln()) + params.alpha1;
    let c2 = g * p / rho;
    Ok((s, c2 / (g - 1.0) + 0.5 * u * u))
}

/// `(s(w_in) − s0, h(w_in) − h0, p(w_out) − p0)`; zero iff the boundary conditions hold.
pub fn euler_boundary_residual(w_in: &State, w_out: &State, bd: &EulerBoundary, params: &EulerParams) -> Result<State> {
    let (s, h) = euler_entropy_enthalpy(w_in, params)?;
    euler_entropy_enthalpy(w_out, params)?;
    let p = euler_pressure(w_out, params)?;
    Ok(State::from_slice(&[s - bd.s0, h - bd.h0, p - bd.p0]))
}

/// Conserved state from density, velocity and pressure.
pub fn euler_conserved(rho: f64, u: f64, p: f64, params: &EulerParams) -> State {
    State::from_slice(&[rho, rho * u, p / (params.gamma - 1.0) + 0.5 * rho * u * u])
}

/// Density, velocity, pressure.
pub fn euler_primitive(w: &State, params: &EulerParams) -> Result<(f64, f64, f64)> {
    let p = euler_pressure(w, params)?;
    Ok((w[0], w[1] / w[0], p))
}

/// Sound speed.
pub fn euler_sound_speed(w: &State, params: &EulerParams) -> Result<f64> {
    let p = euler_positive_pressure(w, params)?;
    Ok((params.gamma * p / w[0]).sqrt())
}

/// Stagnation density and pressure implied by inflow entropy and total enthalpy.
pub fn stagnation_state(bd: &EulerBoundary, params: &EulerParams) -> Result<(f64, f64)> {
    if !(bd.h0 > 0.0) || !(bd.p0 > 0.0) {
        return Err(Error::InvalidInput("Euler boundary data needs h0 > 0 and p0 > 0".into()));
    }
    let g = params.gamma;
    // p/ρ = (γ−1)h0/γ at rest, and p/ρ^γ = exp((s0 − α1)/α0).
    let theta = (g - 1.0) * bd.h0 / g;
    let k = ((bd.s0 - params.alpha1) / params.alpha0).exp();
    let rho = (theta / k).powf(1.0 / (g - 1.0));
    Ok((rho, rho * theta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn flux_examples() {
        let p = EulerParams::default();
        let w = State::from_slice(&[1.0, 0.0, 2.5]);
        assert!(close(euler_pressure(&w, &p).unwrap(), 1.0, 1e-15));
        let f = euler_flux(&w, &p).unwrap();
        assert!(f[0] == 0.0 && close(f[1], 1.0, 1e-15) && f[2] == 0.0);
        let w = State::from_slice(&[1.0, 1.0, 2.5]);
        let f = euler_flux(&w, &p).unwrap();
        assert!(close(f[0], 1.0, 1e-15) && close(f[1], 1.8, 1e-15) && close(f[2], 3.3, 1e-15));
        let w = State::from_slice(&[2.0, 2.0, 3.0]);
        assert!(close(euler_pressure(&w, &p).unwrap(), 0.8, 1e-15));
        let w = State::from_slice(&[2.0, 2.0, 1.0]);
        assert_eq!(euler_pressure(&w, &p).unwrap(), 0.0);
    }

    #[test]
    fn nonpositive_density_is_rejected() {
        let p = EulerParams::default();
        let w = State::from_slice(&[0.0, 1.0, 2.5]);
        assert!(matches!(euler_flux(&w, &p), Err(Error::Domain { component: "density", .. })));
        assert!(matches!(euler_source(0.3, &w, &NozzleGeometry::default(), &p), Err(Error::Domain { .. })));
    }

    #[test]
    fn source_examples() {
        let p = EulerParams::default();
        let g = NozzleGeometry::default();
        let w = State::from_slice(&[1.0, 1.0, 2.5]);
        let s = euler_source(0.75, &w, &g, &p).unwrap();
        let k = 0.4 / 1.05;
        assert!(close(s[0], k, 1e-14) && close(s[1], k, 1e-14) && close(s[2], 3.3 * k, 1e-14));
        assert!(close(s[0], 0.380_952_380_952, 1e-11) && close(s[2], 1.257_142_857_142, 1e-11));
        assert_eq!(euler_source(0.5, &w, &g, &p).unwrap().norm_inf(), 0.0);
        let rest = State::from_slice(&[1.0, 0.0, 2.5]);
        assert_eq!(euler_source(0.8, &rest, &g, &p).unwrap().norm_inf(), 0.0);
    }

    #[test]
    fn entropy_enthalpy_examples() {
        let p = EulerParams::default();
        let (s, h) = euler_entropy_enthalpy(&State::from_slice(&[1.0, 0.0, 2.5]), &p).unwrap();
        assert!(close(s, 0.0, 1e-15) && close(h, 3.5, 1e-14));
        let (s, h) = euler_entropy_enthalpy(&State::from_slice(&[1.0, 1.0, 2.5]), &p).unwrap();
        assert!(close(s, 0.8f64.ln(), 1e-15) && close(h, 3.3, 1e-14));
        let q = EulerParams { alpha1: 0.7, ..p };
        let w = euler_conserved(2.0, 0.3, 2f64.powf(1.4), &q);
        assert!(close(euler_entropy_enthalpy(&w, &q).unwrap().0, 0.7, 1e-14));
        let bad = State::from_slice(&[1.0, 1.0, 0.5]);
        assert!(matches!(euler_entropy_enthalpy(&bad, &p), Err(Error::Domain { component: "pressure", .. })));
    }

    #[test]
    fn boundary_residual_examples() {
        let p = EulerParams::default();
        let bd = EulerBoundary { p0: 1.0, s0: 0.0, h0: 3.5 };
        let rest = State::from_slice(&[1.0, 0.0, 2.5]);
        assert!(euler_boundary_residual(&rest, &rest, &bd, &p).unwrap().norm_inf() < 1e-15);
        let out = euler_conserved(1.0, 0.0, 1.1, &p);
        let r = euler_boundary_residual(&rest, &out, &bd, &p).unwrap();
        assert!(close(r[0], 0.0, 1e-15) && close(r[1], 0.0, 1e-15) && close(r[2], 0.1, 1e-14));
    }

    #[test]
    fn stagnation_defaults() {
        let (rho, pt) = stagnation_state(&EulerBoundary::default(), &EulerParams::default()).unwrap();
        assert!(close(rho, 1.0, 1e-14) && close(pt, 1.0, 1e-14));
    }

    #[test]
    fn geometry_derivative_matches_central_differences() {
        let g = NozzleGeometry::default();
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            let h = 1e-5;
            let fd = (g.area(x + h) - g.area(x - h)) / (2.0 * h);
            assert!(close(fd, g.area_derivative(x), 1e-8));
            let fd2 = (g.log_area_derivative(x + h) - g.log_area_derivative(x - h)) / (2.0 * h);
            assert!(close(fd2, g.log_area_second_derivative(x), 1e-8));
        }
    }
}
