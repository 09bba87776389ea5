//! Viscous adjoint `−f'(w)^T z_x + S'(w)^T z = ε z_xx + p'(w)` and the scalar inviscid oracle.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::banded::BandMatrix;
use crate::error::{Error, Result};
use crate::models::euler::{euler_pressure_gradient, euler_sound_speed};
use crate::models::ModelSpec;
use crate::ode::{dopri5, DenseTrajectory, OdeOptions};
use crate::reference::{PiecewiseSolution, Side};
use crate::state::{Matrix, State};
use crate::viscous::{FieldSolution, Grid};

/// Tolerance on the discrete adjoint residual.
pub const ADJOINT_TOLERANCE: f64 = 1e-10;

/// Boundary rows of the adjoint system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BcPolicy {
    /// `z(0) = z(1) = 0`.
    DirichletZero,
    /// Euler only: the adjoint conditions dual to prescribing `(s, h)` at inflow and `p` at
    /// outflow, plus zero-gradient rows for the adjoint characteristics leaving the domain.
    LinearizedCharacteristic,
}

impl std::fmt::Display for BcPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BcPolicy::DirichletZero => "dirichlet-zero",
            BcPolicy::LinearizedCharacteristic => "linearized-characteristic",
        })
    }
}

/// Anything that can be evaluated as an adjoint weight `z(x)`.
pub trait AdjointField: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: f64) -> State;
    /// Points where the field may have a derivative jump; quadrature splits there.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Wraps a closure as an adjoint field.
pub struct FnField<F: Fn(f64) -> State + Sync> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(f64) -> State + Sync> AdjointField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: f64) -> State {
        (self.f)(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointSolution {
    pub grid: Grid,
    pub values: Vec<State>,
    pub epsilon: f64,
    /// Fingerprint of the primal values the adjoint was linearized about.
    pub primal_ref: String,
    pub policy: BcPolicy,
    pub residual_norm: f64,
    /// Smallest over largest pivot of the factorization.
    pub pivot_ratio: f64,
}

impl AdjointSolution {
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|z| z[k]).collect()
    }

    pub fn interpolate(&self, x: f64) -> State {
        let (i, t) = self.grid.locate(x);
        State::lerp(&self.values[i], &self.values[i + 1], t)
    }
}

impl AdjointField for AdjointSolution {
    fn dim(&self) -> usize {
        self.values[0].dim()
    }
    fn value(&self, x: f64) -> State {
        self.interpolate(x)
    }
    fn kinks(&self) -> Vec<f64> {
        self.grid.nodes()
    }
}

/// FNV-1a over the bit patterns of ε and the nodal values.
pub fn primal_fingerprint(sol: &FieldSolution) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |v: f64| {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(sol.epsilon);
    for w in &sol.values {
        w.as_slice().iter().for_each(|&c| eat(c));
    }
    format!("{h:016x}")
}

fn cross(a: &State, b: &State) -> State {
    State::from_slice(&[a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])
}

/// Inflow perturbation direction `q` spanning `ker[∇s; ∇h]`.
fn inflow_admissible_direction(w: &State, model: &ModelSpec) -> Result<State> {
    let params = model.euler_params().expect("Euler model");
    let g = params.gamma;
    let p = crate::models::euler::euler_positive_pressure(w, params)?;
    let rho = w[0];
    let u = w[1] / rho;
    let dp = euler_pressure_gradient(w, params)?;
    let e1 = State::from_slice(&[1.0, 0.0, 0.0]);
    let ds = (dp * (1.0 / p) - e1 * (g / rho)) * params.alpha0;
    let du2 = State::from_slice(&[-u * u / rho, u / rho, 0.0]);
    let dh = (dp * (1.0 / rho) - e1 * (p / (rho * rho))) * (g / (g - 1.0)) + du2;
    Ok(cross(&ds, &dh))
}

/// Right eigenvectors of `f'(w)` for the speeds `u − c`, `u`, `u + c`.
fn eigenvectors(w: &State, model: &ModelSpec) -> Result<[State; 3]> {
    let params = model.euler_params().expect("Euler model");
    let c = euler_sound_speed(w, params)?;
    let p = crate::models::euler::euler_pressure(w, params)?;
    let u = w[1] / w[0];
    let hh = (w[2] + p) / w[0];
    Ok([
        State::from_slice(&[1.0, u - c, hh - u * c]),
        State::from_slice(&[1.0, u, 0.5 * u * u]),
        State::from_slice(&[1.0, u + c, hh + u * c]),
    ])
}

/// Frozen-coefficient adjoint matrix with interior rows only; boundary rows are filled per policy.
fn assemble_interior(model: &ModelSpec, primal: &FieldSolution) -> Result<(BandMatrix, Vec<f64>)> {
    let d = model.dim();
    let grid = &primal.grid;
    let n = grid.intervals();
    let h = grid.h();
    let eps = primal.epsilon;
    let diff = eps / (h * h);
    let b = 2 * d - 1;
    let mut a = BandMatrix::zeros(d * (n + 1), b, b);
    let mut rhs = vec![0.0; d * (n + 1)];
    for i in 1..n {
        let w = &primal.values[i];
        let ft = model.flux_jacobian(w)?.transpose();
        let st = model.source_jacobian(grid.x(i), w)?.transpose();
        let pg = model.target_gradient(w)?;
        for r in 0..d {
            let row = i * d + r;
            rhs[row] = pg[r];
            for c in 0..d {
                let id = if r == c { 1.0 } else { 0.0 };
                a.add(row, (i - 1) * d + c, 0.5 / h * ft.get(r, c) - diff * id);
                a.add(row, i * d + c, st.get(r, c) + 2.0 * diff * id);
                a.add(row, (i + 1) * d + c, -0.5 / h * ft.get(r, c) - diff * id);
            }
        }
    }
    Ok((a, rhs))
}

fn set_row(a: &mut BandMatrix, row: usize, node: usize, d: usize, coeffs: &State, sign: f64) {
    for c in 0..d {
        a.add(row, node * d + c, sign * coeffs[c]);
    }
}

fn boundary_rows(model: &ModelSpec, primal: &FieldSolution, policy: BcPolicy, a: &mut BandMatrix) -> Result<()> {
    let d = model.dim();
    let n = primal.grid.intervals();
    match policy {
        BcPolicy::DirichletZero => {
            for k in 0..d {
                a.add(k, k, 1.0);
                a.add(n * d + k, n * d + k, 1.0);
            }
        }
        BcPolicy::LinearizedCharacteristic => {
            if model.geometry().is_none() {
                return Err(Error::InvalidInput("linearized-characteristic adjoint conditions need the Euler model".into()));
            }
            let w0 = &primal.values[0];
            let wn = &primal.values[n];
            // Inflow: z^T A q = 0, and no jump in the adjoint characteristics that leave through x = 0.
            let aq = model.flux_jacobian(w0)?.mul_vec(&inflow_admissible_direction(w0, model)?);
            set_row(a, 0, 0, d, &aq, 1.0);
            let r0 = eigenvectors(w0, model)?;
            for (row, r) in [(1, &r0[1]), (2, &r0[2])] {
                set_row(a, row, 0, d, r, -1.0);
                set_row(a, row, 1, d, r, 1.0);
            }
            // Outflow: z^T A t = 0 for both t in ker ∇p, and a zero-gradient row for u − c.
            let u = wn[1] / wn[0];
            let an = model.flux_jacobian(wn)?;
            let t1 = State::from_slice(&[1.0, 0.0, -0.5 * u * u]);
            let t2 = State::from_slice(&[0.0, 1.0, u]);
            set_row(a, n * d, n, d, &an.mul_vec(&t1), 1.0);
            set_row(a, n * d + 1, n, d, &an.mul_vec(&t2), 1.0);
            let rn = eigenvectors(wn, model)?;
            set_row(a, n * d + 2, n, d, &rn[0], 1.0);
            set_row(a, n * d + 2, n - 1, d, &rn[0], -1.0);
        }
    }
    Ok(())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves the discrete viscous adjoint about a converged primal solution.
pub fn solve_viscous_adjoint(model: &ModelSpec, primal: &FieldSolution, policy: BcPolicy) -> Result<AdjointSolution> {
    if !primal.converged {
        return Err(Error::InvalidInput("adjoint requires a converged primal solution".into()));
    }
    let d = model.dim();
    if primal.dim() != d {
        return Err(Error::InvalidInput("primal dimension does not match the model".into()));
    }
    let (mut a, rhs) = assemble_interior(model, primal)?;
    boundary_rows(model, primal, policy, &mut a)?;
    let lu = a.clone().factor()?;
    let mut z = lu.solve(&rhs);
    let mut res = residual(&a, &z, &rhs);
    let mut norm = max_abs(&res);
    for round in 0..4 {
        if norm < ADJOINT_TOLERANCE {
            break;
        }
        let dz = lu.solve(&res);
        let trial: Vec<f64> = z.iter().zip(&dz).map(|(a, b)| a + b).collect();
        let rt = residual(&a, &trial, &rhs);
        let nt = max_abs(&rt);
        debug!("adjoint refinement {round}: {norm:.3e} -> {nt:.3e}");
        if nt >= norm {
            break;
        }
        z = trial;
        res = rt;
        norm = nt;
    }
    let values = (0..primal.grid.len()).map(|i| State::from_slice(&z[i * d..(i + 1) * d])).collect();
    Ok(AdjointSolution {
        grid: primal.grid,
        values,
        epsilon: primal.epsilon,
        primal_ref: primal_fingerprint(primal),
        policy,
        residual_norm: norm,
        pivot_ratio: lu.pivot_ratio,
    })
}

fn residual(a: &BandMatrix, z: &[f64], rhs: &[f64]) -> Vec<f64> {
    a.mul_vec(z).iter().zip(rhs).map(|(az, b)| b - az).collect()
}

/// Discrete adjoint operator applied to `z` minus `p'(w)`, interior rows only.
pub fn adjoint_residual(model: &ModelSpec, primal: &FieldSolution, z: &[State]) -> Result<f64> {
    let (a, rhs) = assemble_interior(model, primal)?;
    let d = model.dim();
    let flat: Vec<f64> = z.iter().flat_map(|s| s.as_slice().iter().copied()).collect();
    let r = residual(&a, &flat, &rhs);
    Ok(max_abs(&r[d..r.len() - d]))
}

/// Branch-wise solution of the inviscid scalar adjoint `−f'(w) z_x + S'(w) z = p'(w)`.
#[derive(Debug, Clone)]
pub struct AdjointOracle {
    alpha: f64,
    left: DenseTrajectory,
    right: DenseTrajectory,
}

impl AdjointOracle {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.alpha {
            self.left.eval(x)
        } else {
            self.right.eval(x)
        }
    }

    pub fn eval_side(&self, x: f64, side: Side) -> f64 {
        match side {
            Side::Left => self.left.eval(x),
            Side::Right => self.right.eval(x),
        }
    }

    /// Value at the shock; both branches agree there by construction.
    pub fn at_shock(&self) -> f64 {
        self.left.eval(self.alpha)
    }
}

impl AdjointField for AdjointOracle {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, x: f64) -> State {
        State::scalar(self.eval(x))
    }
    fn kinks(&self) -> Vec<f64> {
        vec![self.alpha]
    }
}

fn check_no_sign_change(w: &PiecewiseSolution, side: Side) -> Result<()> {
    let (a, b) = match side {
        Side::Left => (0.0, w.alpha()),
        Side::Right => (w.alpha(), 1.0),
    };
    let n = 10_000;
    let first = w.eval_side(a, side)[0];
    for i in 0..=n {
        let x = a + (b - a) * i as f64 / n as f64;
        let v = w.eval_side(x, side)[0];
        if v == 0.0 || v.signum() != first.signum() {
            return Err(Error::InvalidInput(format!("w vanishes on the {side:?} branch near x = {x}; the adjoint ODE is singular")));
        }
    }
    Ok(())
}

/// Integrates the scalar inviscid adjoint from `anchor = (x, z)`.
///
/// An anchor at the shock seeds both branches. An anchor off the shock fixes its own
/// branch, and continuity at `α` seeds the other one.
pub fn scalar_inviscid_adjoint_oracle(model: &ModelSpec, w: &PiecewiseSolution, anchor: (f64, f64)) -> Result<AdjointOracle> {
    if model.dim() != 1 || w.dim() != 1 {
        return Err(Error::InvalidInput("the inviscid adjoint oracle is scalar only".into()));
    }
    let (xa, za) = anchor;
    if !(0.0..=1.0).contains(&xa) {
        return Err(Error::InvalidInput(format!("anchor {xa} outside [0, 1]")));
    }
    check_no_sign_change(w, Side::Left)?;
    check_no_sign_change(w, Side::Right)?;
    let alpha = w.alpha();
    let rhs = |side: Side| {
        move |x: f64, z: f64| -> f64 {
            let ws = w.eval_side(x, side);
            let fp: Matrix = model.flux_jacobian(&ws).expect("scalar flux");
            let sp = model.source_jacobian(x, &ws).expect("scalar source");
            let pp = model.target_gradient(&ws).expect("scalar target");
            (sp.get(0, 0) * z - pp[0]) / fp.get(0, 0)
        }
    };
    let opts = OdeOptions::default();
    let at_shock = (xa - alpha).abs() <= 1e-12;
    let (left, right) = if at_shock {
        (dopri5(rhs(Side::Left), alpha, za, 0.0, opts)?, dopri5(rhs(Side::Right), alpha, za, 1.0, opts)?)
    } else if xa < alpha {
        let l = dopri5(rhs(Side::Left), xa, za, 0.0, opts)?;
        let l = extend(l, rhs(Side::Left), xa, za, alpha, opts)?;
        let zs = l.eval(alpha);
        (l, dopri5(rhs(Side::Right), alpha, zs, 1.0, opts)?)
    } else {
        let r = dopri5(rhs(Side::Right), xa, za, 1.0, opts)?;
        let r = extend(r, rhs(Side::Right), xa, za, alpha, opts)?;
        let zs = r.eval(alpha);
        (dopri5(rhs(Side::Left), alpha, zs, 0.0, opts)?, r)
    };
    Ok(AdjointOracle { alpha, left, right })
}

/// Joins a trajectory from the anchor to one end with one from the anchor to `α`.
fn extend(
    first: DenseTrajectory,
    f: impl FnMut(f64, f64) -> f64,
    xa: f64,
    za: f64,
    alpha: f64,
    opts: OdeOptions,
) -> Result<DenseTrajectory> {
    let second = dopri5(f, xa, za, alpha, opts)?;
    Ok(DenseTrajectory::join(first, second))
}

#[cfg(test)]
mod tests;
