//! Viscous regularization `f(w)_x + S(x, w) = ε w_xx` solved by damped Newton with ε-continuation.

mod io;
mod transition;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::banded::BandMatrix;
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::reference::{exact_solution, PiecewiseSolution, Side};
use crate::state::State;

pub use io::{read_checkpoint, write_checkpoint, write_field_csv, CHECKPOINT_MAGIC};
pub use transition::{detect_transition_region, smooth_jump, smooth_jump_scalar, SmoothJump, TransitionRegion};

/// Smallest admissible number of grid intervals.
pub const MIN_INTERVALS: usize = 16;

/// Uniform grid on `[0, 1]` with `n` intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn uniform(intervals: usize) -> Result<Self> {
        if intervals < MIN_INTERVALS {
            return Err(Error::InvalidInput(format!("grid needs at least {MIN_INTERVALS} intervals, got {intervals}")));
        }
        Ok(Self { n: intervals })
    }

    /// Rebuilds a grid from node positions, checking uniform spacing on `[0, 1]`.
    pub fn from_nodes(nodes: &[f64]) -> Result<Self> {
        if nodes.len() < MIN_INTERVALS + 1 {
            return Err(Error::InvalidInput(format!("{} nodes is too few", nodes.len())));
        }
        let g = Self::uniform(nodes.len() - 1)?;
        for (i, &x) in nodes.iter().enumerate() {
            if (x - g.x(i)).abs() > 1e-12 * g.h().max(1.0) {
                return Err(Error::InvalidInput(format!("node {i} at {x} breaks uniform spacing")));
            }
        }
        Ok(g)
    }

    /// Number of intervals.
    #[inline]
    pub fn intervals(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n + 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i == self.n {
            1.0
        } else {
            i as f64 / self.n as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.x(i)).collect()
    }

    /// Index `i` of the cell `[x_i, x_{i+1}]` containing `x`, and the local coordinate in `[0, 1]`.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let s = (x.clamp(0.0, 1.0) * self.n as f64).min(self.n as f64);
        let i = (s.floor() as usize).min(self.n - 1);
        (i, s - i as f64)
    }
}

/// Grid spacing policy `h = ε/κ` with a node cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPolicy {
    pub kappa: f64,
    pub max_nodes: usize,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self { kappa: 8.0, max_nodes: 200_000 }
    }
}

impl GridPolicy {
    pub fn grid_for(&self, epsilon: f64) -> Result<Grid> {
        if !(self.kappa > 0.0) || !(epsilon > 0.0) {
            return Err(Error::InvalidInput(format!("kappa {} and epsilon {epsilon} must be positive", self.kappa)));
        }
        let want = (self.kappa / epsilon).ceil() as usize;
        Grid::uniform(want.clamp(MIN_INTERVALS, self.max_nodes.saturating_sub(1).max(MIN_INTERVALS)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 50, max_halvings: 20 }
    }
}

/// Nodal solution of the viscous problem and its solver metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSolution {
    pub grid: Grid,
    pub values: Vec<State>,
    pub epsilon: f64,
    pub converged: bool,
    pub newton_iterations: usize,
    pub final_residual_norm: f64,
    /// Set when `h > ε/5`.
    pub under_resolved: bool,
}

impl FieldSolution {
    pub fn dim(&self) -> usize {
        self.values[0].dim()
    }

    /// Component `k` at every node.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|w| w[k]).collect()
    }

    /// Piecewise-linear interpolation at `x`.
    pub fn interpolate(&self, x: f64) -> State {
        let (i, t) = self.grid.locate(x);
        State::lerp(&self.values[i], &self.values[i + 1], t)
    }

    /// Values interpolated onto another grid.
    pub fn resample(&self, grid: &Grid) -> Vec<State> {
        if grid == &self.grid {
            return self.values.clone();
        }
        (0..grid.len()).map(|i| self.interpolate(grid.x(i))).collect()
    }
}

/// Model plus Dirichlet data and the inviscid reference used for cold starts.
#[derive(Debug, Clone)]
pub struct ViscousProblem {
    pub model: ModelSpec,
    pub reference: PiecewiseSolution,
    pub left: State,
    pub right: State,
    pub newton: NewtonOptions,
}

impl ViscousProblem {
    /// Dirichlet data are the exact inviscid traces at `x = 0` and `x = 1`.
    pub fn new(model: ModelSpec) -> Result<Self> {
        model.validate()?;
        let reference = exact_solution(&model)?;
        let left = reference.eval(0.0);
        let right = reference.eval(1.0);
        Ok(Self { model, reference, left, right, newton: NewtonOptions::default() })
    }

    /// Exact branches blended by `tanh((x − α)/(5ε))`, each clamped at the shock.
    pub fn cold_start(&self, grid: &Grid, epsilon: f64) -> Vec<State> {
        let a = self.reference.alpha();
        let mut v: Vec<State> = (0..grid.len())
            .map(|i| {
                let x = grid.x(i);
                let s = 0.5 * (1.0 + ((x - a) / (5.0 * epsilon)).tanh());
                let wl = self.reference.eval_side(x.min(a), Side::Left);
                let wr = self.reference.eval_side(x.max(a), Side::Right);
                wl * (1.0 - s) + wr * s
            })
            .collect();
        v[0] = self.left;
        *v.last_mut().unwrap() = self.right;
        v
    }

    /// Discrete residual; interior rows `D0 f + S − ε D+D− w`, Dirichlet rows at the ends.
    pub fn residual(&self, grid: &Grid, epsilon: f64, w: &[State]) -> Result<Vec<State>> {
        let n = grid.intervals();
        let h = grid.h();
        let fluxes = w.iter().map(|s| self.model.flux(s)).collect::<Result<Vec<_>>>()?;
        let mut r = Vec::with_capacity(n + 1);
        r.push(w[0] - self.left);
        for i in 1..n {
            let conv = (fluxes[i + 1] - fluxes[i - 1]) * (0.5 / h);
            // Differences of neighbours first: keeps the O(ε/h²) amplification of rounding small.
            let diff = ((w[i + 1] - w[i]) - (w[i] - w[i - 1])) * (epsilon / (h * h));
            r.push(conv + self.model.source(grid.x(i), &w[i])? - diff);
        }
        r.push(w[n] - self.right);
        Ok(r)
    }

    fn check_all_admissible(&self, w: &[State]) -> Result<()> {
        w.iter().try_for_each(|s| self.model.check_admissible(s))
    }
}

/// Band matrix of the Newton linearization, unknowns ordered node-major.
pub fn assemble_jacobian(model: &ModelSpec, grid: &Grid, epsilon: f64, w: &[State]) -> Result<BandMatrix> {
    let d = model.dim();
    let n = grid.intervals();
    let h = grid.h();
    let b = 2 * d - 1;
    let mut jm = BandMatrix::zeros(d * (n + 1), b, b);
    let diff = epsilon / (h * h);
    for k in 0..d {
        jm.add(k, k, 1.0);
        jm.add(n * d + k, n * d + k, 1.0);
    }
    for i in 1..n {
        let fl = model.flux_jacobian(&w[i - 1])?;
        let fr = model.flux_jacobian(&w[i + 1])?;
        let sc = model.source_jacobian(grid.x(i), &w[i])?;
        for r in 0..d {
            let row = i * d + r;
            for c in 0..d {
                let id = if r == c { 1.0 } else { 0.0 };
                jm.add(row, (i - 1) * d + c, -0.5 / h * fl.get(r, c) - diff * id);
                jm.add(row, i * d + c, sc.get(r, c) + 2.0 * diff * id);
                jm.add(row, (i + 1) * d + c, 0.5 / h * fr.get(r, c) - diff * id);
            }
        }
    }
    Ok(jm)
}

fn max_norm(r: &[State]) -> f64 {
    r.iter().map(State::norm_inf).fold(0.0, f64::max)
}

fn flatten(v: &[State]) -> Vec<f64> {
    v.iter().flat_map(|s| s.as_slice().iter().copied()).collect()
}

/// Damped Newton solve at fixed ε. A cold start is used when `init` is `None`.
///
/// Non-convergence is reported through `converged = false`; linear-algebra failures are errors.
pub fn solve_viscous_primal(
    problem: &ViscousProblem,
    grid: &Grid,
    epsilon: f64,
    init: Option<&FieldSolution>,
) -> Result<FieldSolution> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    let under_resolved = grid.h() > epsilon / 5.0;
    if under_resolved {
        warn!("layer under-resolved: h = {:.3e} > eps/5 = {:.3e}", grid.h(), epsilon / 5.0);
    }
    let d = problem.model.dim();
    let mut w = match init {
        Some(s) => {
            if s.dim() != d {
                return Err(Error::InvalidInput("initial guess has the wrong dimension".into()));
            }
            let mut v = s.resample(grid);
            v[0] = problem.left;
            *v.last_mut().unwrap() = problem.right;
            v
        }
        None => problem.cold_start(grid, epsilon),
    };
    problem.check_all_admissible(&w)?;
    let opts = problem.newton;
    let mut r = problem.residual(grid, epsilon, &w)?;
    let mut norm = max_norm(&r);
    let mut iterations = 0;
    while norm >= opts.tolerance && iterations < opts.max_iterations {
        let jac = assemble_jacobian(&problem.model, grid, epsilon, &w)?;
        let rhs: Vec<f64> = flatten(&r).into_iter().map(|x| -x).collect();
        let delta = jac.factor()?.solve(&rhs);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<State> = w
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let mut t = *s;
                    for k in 0..d {
                        t[k] += lambda * delta[i * d + k];
                    }
                    t
                })
                .collect();
            if problem.check_all_admissible(&trial).is_ok() {
                if let Ok(rt) = problem.residual(grid, epsilon, &trial) {
                    let nt = max_norm(&rt);
                    if nt < norm {
                        accepted = Some((trial, rt, nt));
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((t, rt, nt)) => {
                debug!("eps {epsilon:.3e} newton {iterations}: |r| = {nt:.3e} (step {lambda})");
                w = t;
                r = rt;
                norm = nt;
            }
            None => {
                warn!("eps {epsilon:.3e}: line search failed at |r| = {norm:.3e}");
                break;
            }
        }
    }
    Ok(FieldSolution {
        grid: *grid,
        values: w,
        epsilon,
        converged: norm < opts.tolerance,
        newton_iterations: iterations,
        final_residual_norm: norm,
        under_resolved,
    })
}

/// Result of an ε-continuation; `diagnostic` explains a truncated sweep.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub solutions: Vec<FieldSolution>,
    pub diagnostic: Option<String>,
}

/// Solves for each ε in turn, warm-starting from the previous solution interpolated onto the new grid.
pub fn continuation_sweep(problem: &ViscousProblem, policy: &GridPolicy, eps_list: &[f64]) -> Result<Sweep> {
    validate_decreasing(eps_list, "eps_list")?;
    let mut solutions: Vec<FieldSolution> = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let grid = policy.grid_for(eps)?;
        let sol = solve_viscous_primal(problem, &grid, eps, solutions.last())?;
        if !sol.converged {
            let msg = format!(
                "Newton did not converge at eps = {eps:e} (|r| = {:.3e} after {} iterations)",
                sol.final_residual_norm, sol.newton_iterations
            );
            if solutions.is_empty() {
                return Err(Error::Divergence(msg));
            }
            warn!("{msg}; sweep truncated");
            return Ok(Sweep { solutions, diagnostic: Some(msg) });
        }
        solutions.push(sol);
    }
    Ok(Sweep { solutions, diagnostic: None })
}

/// Checks that a parameter list is nonempty, positive and strictly decreasing.
pub fn validate_decreasing(list: &[f64], name: &str) -> Result<()> {
    if list.is_empty() {
        return Err(Error::InvalidInput(format!("{name} is empty")));
    }
    if list.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidInput(format!("{name} must contain positive values")));
    }
    if list.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::InvalidInput(format!("{name} must be strictly decreasing")));
    }
    Ok(())
}

/// Spread of `F_{i+1/2} + h·Σ_{j≤i} S_j` over the cell faces, with the face flux
/// `F = (f_i + f_{i+1})/2 − ε(w_{i+1} − w_i)/h`; zero for an exact discrete solution.
pub fn conservation_defect(model: &ModelSpec, sol: &FieldSolution) -> Result<f64> {
    let h = sol.grid.h();
    let w = &sol.values;
    let n = sol.grid.intervals();
    let mut acc = State::zeros(model.dim());
    let mut lo = State::splat(model.dim(), f64::INFINITY);
    let mut hi = State::splat(model.dim(), f64::NEG_INFINITY);
    for i in 0..n {
        if i > 0 {
            acc += model.source(sol.grid.x(i), &w[i])? * h;
        }
        let face = (model.flux(&w[i])? + model.flux(&w[i + 1])?) * 0.5 - (w[i + 1] - w[i]) * (sol.epsilon / h) + acc;
        for k in 0..model.dim() {
            lo[k] = lo[k].min(face[k]);
            hi[k] = hi[k].max(face[k]);
        }
    }
    Ok((hi - lo).norm_inf())
}

#[cfg(test)]
mod tests;
