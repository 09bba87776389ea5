//! Transition-region detection and the smooth jump `∫_{α⁻}^{α⁺} q_x dx`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::State;

use super::{FieldSolution, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionRegion {
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub alpha_hat: f64,
    pub max_gradient: f64,
    pub theta: f64,
    /// Node indices of `alpha_minus`, `alpha_hat`, `alpha_plus`.
    pub i_minus: usize,
    pub i_hat: usize,
    pub i_plus: usize,
    /// Set when growth stopped at the half-distance-to-boundary cap rather than the gradient test.
    pub capped: bool,
}

/// Node-centred central difference, one-sided at the ends.
fn gradient(grid: &Grid, q: &[f64]) -> Vec<f64> {
    let n = grid.intervals();
    let h = grid.h();
    (0..=n)
        .map(|i| match i {
            0 => (q[1] - q[0]) / h,
            _ if i == n => (q[n] - q[n - 1]) / h,
            _ => (q[i + 1] - q[i - 1]) / (2.0 * h),
        })
        .collect()
}

/// Locates the shock layer of the first solution component.
///
/// `α̂` is the node of largest `|w_x|`. The region grows outward from `α̂` and stops at
/// the first node where both `|w_x| < θ·max|w_x|` and `ε|w_xx| < θ|w_x|` hold, so the
/// endpoints sit where the profile varies on a scale much longer than ε. Growth is
/// capped at half the distance from `α̂` to the nearer boundary.
pub fn detect_transition_region(sol: &FieldSolution, theta: f64) -> Result<TransitionRegion> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidInput(format!("theta = {theta} must lie in (0, 1)")));
    }
    let grid = &sol.grid;
    let n = grid.intervals();
    let h = grid.h();
    let q = sol.component(0);
    let g = gradient(grid, &q);
    let (i_hat, max_gradient) = g
        .iter()
        .enumerate()
        .map(|(i, v)| (i, v.abs()))
        .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    if i_hat == 0 || i_hat == n {
        return Err(Error::NoInteriorLayer(format!(
            "largest gradient {max_gradient:.3e} sits at boundary node {i_hat}"
        )));
    }
    let x_hat = grid.x(i_hat);
    let reach = 0.5 * x_hat.min(1.0 - x_hat);
    let settled = |j: usize| {
        let wxx = (q[j + 1] - 2.0 * q[j] + q[j - 1]) / (h * h);
        g[j].abs() < theta * max_gradient && sol.epsilon * wxx.abs() < theta * g[j].abs()
    };
    let mut capped = false;
    let mut i_minus = i_hat - 1;
    loop {
        if i_minus == 0 {
            capped = true;
            break;
        }
        if settled(i_minus) {
            break;
        }
        if i_minus == 1 || x_hat - grid.x(i_minus - 1) > reach {
            capped = true;
            break;
        }
        i_minus -= 1;
    }
    let mut i_plus = i_hat + 1;
    loop {
        if i_plus == n {
            capped = true;
            break;
        }
        if settled(i_plus) {
            break;
        }
        if i_plus == n - 1 || grid.x(i_plus + 1) - x_hat > reach {
            capped = true;
            break;
        }
        i_plus += 1;
    }
    Ok(TransitionRegion {
        alpha_minus: grid.x(i_minus),
        alpha_plus: grid.x(i_plus),
        alpha_hat: x_hat,
        max_gradient,
        theta,
        i_minus,
        i_hat,
        i_plus,
        capped,
    })
}

/// Both evaluations of a smooth jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothJump {
    /// `q(α⁺) − q(α⁻)`.
    pub endpoint: State,
    /// Midpoint integral of the staggered difference `(q_{i+1} − q_i)/h` over `[α⁻, α⁺]`.
    pub integral: State,
    /// True when an endpoint was off-grid and linear interpolation was used (error O(h²) for smooth q).
    pub interpolated: bool,
}

impl SmoothJump {
    pub fn value(&self) -> State {
        self.endpoint
    }

    pub fn discrepancy(&self) -> f64 {
        (self.endpoint - self.integral).norm_inf()
    }
}

fn node_index(grid: &Grid, x: f64) -> Option<usize> {
    let s = x * grid.intervals() as f64;
    let i = s.round();
    ((s - i).abs() <= 1e-9 && i >= 0.0 && i <= grid.intervals() as f64).then_some(i as usize)
}

fn sample(grid: &Grid, q: &[State], x: f64) -> State {
    let (i, t) = grid.locate(x);
    State::lerp(&q[i], &q[i + 1], t)
}

/// Smooth jump of a nodal field `q` across the region.
pub fn smooth_jump(sol: &FieldSolution, q: &[State], region: &TransitionRegion) -> Result<SmoothJump> {
    let grid = &sol.grid;
    if q.len() != grid.len() {
        return Err(Error::InvalidInput(format!("field has {} samples for {} nodes", q.len(), grid.len())));
    }
    let (a, b) = (region.alpha_minus, region.alpha_plus);
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || !(a < b) {
        return Err(Error::InvalidInput(format!("invalid region [{a}, {b}]")));
    }
    let h = grid.h();
    let ia = node_index(grid, a);
    let ib = node_index(grid, b);
    let interpolated = ia.is_none() || ib.is_none();
    let qa = ia.map_or_else(|| sample(grid, q, a), |i| q[i]);
    let qb = ib.map_or_else(|| sample(grid, q, b), |i| q[i]);
    // Full cells strictly inside [a, b], plus partial cells at off-grid ends.
    let first = ia.unwrap_or_else(|| grid.locate(a).0 + 1);
    let last = ib.unwrap_or_else(|| grid.locate(b).0);
    let mut integral = State::zeros(q[0].dim());
    if first <= last {
        for j in first..last {
            integral += ((q[j + 1] - q[j]) * (1.0 / h)) * h;
        }
        if ia.is_none() {
            integral += ((q[first] - qa) * (1.0 / (grid.x(first) - a))) * (grid.x(first) - a);
        }
        if ib.is_none() {
            integral += ((qb - q[last]) * (1.0 / (b - grid.x(last)))) * (b - grid.x(last));
        }
    } else {
        integral = qb - qa;
    }
    Ok(SmoothJump { endpoint: qb - qa, integral, interpolated })
}

/// Smooth jump of a nodal scalar field.
pub fn smooth_jump_scalar(sol: &FieldSolution, q: &[f64], region: &TransitionRegion) -> Result<SmoothJump> {
    let states: Vec<State> = q.iter().map(|&v| State::scalar(v)).collect();
    smooth_jump(sol, &states, region)
}
