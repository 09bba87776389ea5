//! Exact piecewise-smooth shocked solutions and their perturbations.

mod nozzle;
mod perturbation;
mod transform;

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::models::{ModelSpec, ScalarBoundary};
use crate::state::State;

pub use nozzle::{mach_from_area_ratio, normal_shock, nozzle_exact_solution, NozzleBranch, NozzleShock};
pub use perturbation::{
    check_closeness, generate_perturbation, generate_perturbation_with, ClosenessReport, ClosenessThresholds,
    PerturbationFamily, PerturbedBranch,
};
pub use transform::{make_transform, CoordinateTransform};

/// Probe-grid resolution for sup-norm measurements.
pub const PROBE_POINTS: usize = 10_000;
/// Half-width of the window excluded around a shock on probe grids.
pub const PROBE_EXCLUSION: f64 = 1e-9;

/// A smooth branch of a piecewise solution, with its analytic derivative.
pub trait Branch: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: f64) -> State;
    fn derivative(&self, x: f64) -> State;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Branch `w(x) = a + slope·x` of a scalar solution.
#[derive(Debug, Clone, Copy)]
pub struct AffineBranch {
    pub intercept: f64,
    pub slope: f64,
}

impl Branch for AffineBranch {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, x: f64) -> State {
        State::scalar(self.intercept + self.slope * x)
    }
    fn derivative(&self, _x: f64) -> State {
        State::scalar(self.slope)
    }
}

/// Solution that is smooth on `[0, α)` and `(α, 1]` with a single jump at `α`.
#[derive(Clone)]
pub struct PiecewiseSolution {
    left: Arc<dyn Branch>,
    right: Arc<dyn Branch>,
    alpha: f64,
    w_minus: State,
    w_plus: State,
}

impl fmt::Debug for PiecewiseSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PiecewiseSolution")
            .field("alpha", &self.alpha)
            .field("w_minus", &self.w_minus)
            .field("w_plus", &self.w_plus)
            .finish()
    }
}

impl PiecewiseSolution {
    /// Traces are taken from the branches at `α`.
    pub fn new(left: Arc<dyn Branch>, right: Arc<dyn Branch>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidInput(format!("shock location {alpha} must lie in (0, 1)")));
        }
        if left.dim() != right.dim() {
            return Err(Error::InvalidInput("branches have different dimensions".into()));
        }
        let w_minus = left.value(alpha);
        let w_plus = right.value(alpha);
        Ok(Self { left, right, alpha, w_minus, w_plus })
    }

    pub fn dim(&self) -> usize {
        self.left.dim()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn w_minus(&self) -> State {
        self.w_minus
    }

    pub fn w_plus(&self) -> State {
        self.w_plus
    }

    pub fn left_branch(&self) -> &Arc<dyn Branch> {
        &self.left
    }

    pub fn right_branch(&self) -> &Arc<dyn Branch> {
        &self.right
    }

    pub fn side_of(&self, x: f64) -> Side {
        if x < self.alpha {
            Side::Left
        } else {
            Side::Right
        }
    }

    /// Value using the left branch for `x < α` and the right branch otherwise.
    pub fn eval(&self, x: f64) -> State {
        self.eval_side(x, self.side_of(x))
    }

    pub fn derivative(&self, x: f64) -> State {
        self.derivative_side(x, self.side_of(x))
    }

    /// Value of a chosen branch, including its smooth extension past `α`.
    pub fn eval_side(&self, x: f64, side: Side) -> State {
        match side {
            Side::Left => self.left.value(x),
            Side::Right => self.right.value(x),
        }
    }

    pub fn derivative_side(&self, x: f64, side: Side) -> State {
        match side {
            Side::Left => self.left.derivative(x),
            Side::Right => self.right.derivative(x),
        }
    }

    /// One-sided derivatives `(w_x(α⁻), w_x(α⁺))` from the analytic branches.
    pub fn one_sided_derivatives(&self) -> (State, State) {
        (self.left.derivative(self.alpha), self.right.derivative(self.alpha))
    }

    /// Sup over a probe grid of the pointwise residual `f(w)_x + S(x, w)` off the shock.
    pub fn max_residual(&self, model: &ModelSpec, points: usize) -> Result<f64> {
        let mut worst = 0.0f64;
        for i in 0..=points {
            let x = i as f64 / points as f64;
            if (x - self.alpha).abs() < PROBE_EXCLUSION {
                continue;
            }
            let r = model.smooth_residual(x, &self.eval(x), &self.derivative(x))?;
            worst = worst.max(r.norm_inf());
        }
        Ok(worst)
    }

    /// Writes `x, w_0.., branch` rows (branch 0 left of the shock, 1 right).
    pub fn write_csv<W: Write>(&self, mut out: W, samples: usize) -> Result<()> {
        let d = self.dim();
        let mut header = String::from("x");
        for k in 0..d {
            header.push_str(&format!(",w{k}"));
        }
        header.push_str(",branch\n");
        out.write_all(header.as_bytes())?;
        let n = samples.max(2);
        for i in 0..n {
            let x = i as f64 / (n - 1) as f64;
            let side = self.side_of(x);
            let w = self.eval_side(x, side);
            let mut line = format!("{x:.16e}");
            for k in 0..d {
                line.push_str(&format!(",{:.16e}", w[k]));
            }
            line.push_str(if side == Side::Left { ",0\n" } else { ",1\n" });
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

/// The manufactured scalar solution `1.2 − x | −0.4 − x` with the shock at 0.4.
pub fn manufactured_scalar_solution() -> PiecewiseSolution {
    manufactured_scalar_solution_for(&ScalarBoundary::default()).expect("default data is valid")
}

/// Manufactured solution `a − x | b − x` through the given Dirichlet data.
///
/// With `a = w(0)` and `b = w(1) + 1`, the equal-speed condition `a − α = −(b − α)`
/// puts the shock at `α = (a + b)/2`; the entropy condition requires `a > b`.
pub fn manufactured_scalar_solution_for(bd: &ScalarBoundary) -> Result<PiecewiseSolution> {
    let a = bd.left_value;
    let b = bd.right_value + 1.0;
    let alpha = 0.5 * (a + b);
    if !(a > b) {
        return Err(Error::InvalidInput(format!(
            "boundary data w(0)={}, w(1)={} give no entropy shock",
            bd.left_value, bd.right_value
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("manufactured shock location {alpha} outside (0, 1)")));
    }
    PiecewiseSolution::new(
        Arc::new(AffineBranch { intercept: a, slope: -1.0 }),
        Arc::new(AffineBranch { intercept: b, slope: -1.0 }),
        alpha,
    )
}

/// Exact solution of the configured model.
pub fn exact_solution(model: &ModelSpec) -> Result<PiecewiseSolution> {
    match model {
        ModelSpec::Scalar { boundary } => manufactured_scalar_solution_for(boundary),
        ModelSpec::Euler { params, geometry, boundary } => nozzle_exact_solution(geometry, boundary, params),
    }
}

/// `f(w⁺) − f(w⁻)`.
pub fn rankine_hugoniot_residual(w_minus: &State, w_plus: &State, model: &ModelSpec) -> Result<State> {
    model.check_admissible(w_minus)?;
    model.check_admissible(w_plus)?;
    Ok(model.flux(w_plus)? - model.flux(w_minus)?)
}
