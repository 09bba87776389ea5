//! Transonic nozzle flow with a normal shock in the diverging section.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::models::euler::{euler_conserved, stagnation_state};
use crate::models::{EulerBoundary, EulerParams, NozzleGeometry};
use crate::state::State;

use super::{Branch, PiecewiseSolution};

/// `ln F(M)` of the area–Mach function `F(M) = A/A*`, written to avoid cancellation near `M = 1`.
fn ln_area_ratio(m: f64, g: f64) -> f64 {
    let k = (g + 1.0) / (2.0 * (g - 1.0));
    -m.ln() + k * ((g - 1.0) * (m - 1.0) * (m + 1.0) / (g + 1.0)).ln_1p()
}

/// d(ln F)/dM `= (M² − 1)/(M·(1 + (γ−1)M²/2))`.
fn ln_area_ratio_slope(m: f64, g: f64) -> f64 {
    (m - 1.0) * (m + 1.0) / (m * (1.0 + 0.5 * (g - 1.0) * m * m))
}

/// Mach number with `ln(A/A*) = ln_ratio` on the requested side of the sonic point.
pub fn mach_from_area_ratio(ln_ratio: f64, supersonic: bool, gamma: f64) -> f64 {
    if ln_ratio <= 0.0 {
        return 1.0;
    }
    // Near M = 1, ln F ≈ 2(M − 1)²/(γ + 1).
    let d0 = (0.5 * (gamma + 1.0) * ln_ratio).sqrt();
    let (mut lo, mut hi, mut m) = if supersonic {
        let mut hi = 2.0;
        while ln_area_ratio(hi, gamma) < ln_ratio {
            hi *= 2.0;
        }
        (1.0, hi, (1.0 + d0).min(0.5 * (1.0 + hi)))
    } else {
        (0.0, 1.0, (1.0 - d0).max(0.5))
    };
    for _ in 0..200 {
        let phi = ln_area_ratio(m, gamma) - ln_ratio;
        // φ increases away from M = 1 on both sides.
        let outward = if supersonic { phi < 0.0 } else { phi > 0.0 };
        if outward {
            lo = m;
        } else {
            hi = m;
        }
        if phi == 0.0 {
            return m;
        }
        let next = m - phi / ln_area_ratio_slope(m, gamma);
        let next = if next > lo && next < hi && next.is_finite() { next } else { 0.5 * (lo + hi) };
        if (next - m).abs() <= 4.0 * f64::EPSILON * m {
            return next;
        }
        m = next;
    }
    m
}

/// Normal-shock relations: downstream Mach number and stagnation-pressure ratio.
pub fn normal_shock(m1: f64, gamma: f64) -> (f64, f64) {
    let g = gamma;
    let m1s = m1 * m1;
    let m2 = ((1.0 + 0.5 * (g - 1.0) * m1s) / (g * m1s - 0.5 * (g - 1.0))).sqrt();
    let a = ((g + 1.0) * m1s / ((g - 1.0) * m1s + 2.0)).powf(g / (g - 1.0));
    let b = ((g + 1.0) / (2.0 * g * m1s - (g - 1.0))).powf(1.0 / (g - 1.0));
    (m2, a * b)
}

/// Isentropic branch with stagnation density/pressure and sonic area `A* = throat_area / pt_ratio`.
#[derive(Debug, Clone, Copy)]
pub struct NozzleBranch {
    pub geometry: NozzleGeometry,
    pub params: EulerParams,
    pub rho_t: f64,
    pub p_t: f64,
    /// Stagnation-pressure ratio relative to the inflow; 1 upstream of the shock.
    pub pt_ratio: f64,
    /// Upstream branch: subsonic before the throat, supersonic after.
    pub accelerating: bool,
}

impl NozzleBranch {
    fn supersonic_at(&self, x: f64) -> bool {
        self.accelerating && x > self.geometry.throat
    }

    pub fn mach(&self, x: f64) -> f64 {
        let g = &self.geometry;
        let d = x - g.throat;
        let ln_ratio = self.pt_ratio.ln() + (g.curvature * d * d / g.throat_area).ln_1p();
        mach_from_area_ratio(ln_ratio, self.supersonic_at(x), self.params.gamma)
    }

    fn mach_slope(&self, x: f64, m: f64) -> f64 {
        let g = &self.geometry;
        let gm = self.params.gamma;
        if self.accelerating && x == g.throat {
            return ((gm + 1.0) * g.area_second_derivative(x) / (4.0 * g.throat_area)).sqrt();
        }
        g.log_area_derivative(x) / ln_area_ratio_slope(m, gm)
    }

    /// Density, velocity, pressure and sound speed at Mach `m`.
    fn primitives(&self, m: f64) -> (f64, f64, f64, f64, f64) {
        let g = self.params.gamma;
        let t = 1.0 + 0.5 * (g - 1.0) * m * m;
        let p = self.p_t * t.powf(-g / (g - 1.0));
        let rho = self.rho_t * t.powf(-1.0 / (g - 1.0));
        let c = (g * p / rho).sqrt();
        (rho, m * c, p, c, t)
    }
}

impl Branch for NozzleBranch {
    fn dim(&self) -> usize {
        3
    }

    fn value(&self, x: f64) -> State {
        let (rho, u, p, _, _) = self.primitives(self.mach(x));
        euler_conserved(rho, u, p, &self.params)
    }

    fn derivative(&self, x: f64) -> State {
        let g = self.params.gamma;
        let m = self.mach(x);
        let (rho, u, p, c, t) = self.primitives(m);
        let dm = self.mach_slope(x, m);
        let dp = -g * m * p / t * dm;
        let drho = -m * rho / t * dm;
        let du = c / t * dm;
        State::from_slice(&[drho, u * drho + rho * du, dp / (g - 1.0) + 0.5 * u * u * drho + rho * u * du])
    }
}

/// Shock data of a nozzle solution.
#[derive(Debug, Clone, Copy)]
pub struct NozzleShock {
    pub alpha: f64,
    pub upstream_mach: f64,
    pub downstream_mach: f64,
    pub pt_ratio: f64,
}

fn exit_pressure(alpha: f64, geom: &NozzleGeometry, params: &EulerParams, p_t: f64) -> (f64, NozzleShock) {
    let g = params.gamma;
    let d = alpha - geom.throat;
    let m1 = mach_from_area_ratio((geom.curvature * d * d / geom.throat_area).ln_1p(), true, g);
    let (m2, ptr) = normal_shock(m1, g);
    let de = 1.0 - geom.throat;
    let me = mach_from_area_ratio(ptr.ln() + (geom.curvature * de * de / geom.throat_area).ln_1p(), false, g);
    let te = 1.0 + 0.5 * (g - 1.0) * me * me;
    (ptr * p_t * te.powf(-g / (g - 1.0)), NozzleShock { alpha, upstream_mach: m1, downstream_mach: m2, pt_ratio: ptr })
}

/// Locates the shock by bisection on the outflow-pressure match and assembles the two branches.
pub fn nozzle_exact_solution(
    geom: &NozzleGeometry,
    bd: &EulerBoundary,
    params: &EulerParams,
) -> Result<PiecewiseSolution> {
    Ok(nozzle_exact_solution_with_shock(geom, bd, params)?.0)
}

pub fn nozzle_exact_solution_with_shock(
    geom: &NozzleGeometry,
    bd: &EulerBoundary,
    params: &EulerParams,
) -> Result<(PiecewiseSolution, NozzleShock)> {
    params.validate()?;
    geom.validate()?;
    let (rho_t, p_t) = stagnation_state(bd, params)?;
    let p = |a: f64| exit_pressure(a, geom, params, p_t);
    let mut lo = geom.throat;
    let mut hi = 1.0;
    let (p_lo, p_hi) = (p(lo).0, p(hi).0);
    if !(bd.p0 < p_lo && bd.p0 > p_hi) {
        return Err(Error::NoTransonicSolution(format!(
            "outflow pressure {} outside the shock-in-nozzle range ({p_hi}, {p_lo})",
            bd.p0
        )));
    }
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        // Exit pressure decreases as the shock moves downstream.
        if p(mid).0 > bd.p0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);
    if geom.area_derivative(alpha).abs() < 1e-8 {
        return Err(Error::NoTransonicSolution(format!("shock at the throat (alpha = {alpha})")));
    }
    let shock = p(alpha).1;
    let up = NozzleBranch { geometry: *geom, params: *params, rho_t, p_t, pt_ratio: 1.0, accelerating: true };
    let down = NozzleBranch {
        pt_ratio: shock.pt_ratio,
        rho_t: rho_t * shock.pt_ratio,
        p_t: p_t * shock.pt_ratio,
        accelerating: false,
        ..up
    };
    Ok((PiecewiseSolution::new(Arc::new(up), Arc::new(down), alpha)?, shock))
}
