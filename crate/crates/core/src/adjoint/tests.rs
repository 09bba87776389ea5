use std::sync::{Arc, OnceLock};

use super::*;
use crate::models::{euler_model, scalar_model};
use crate::reference::{manufactured_scalar_solution, AffineBranch};
use crate::viscous::{
    assemble_jacobian, continuation_sweep, detect_transition_region, solve_viscous_primal, GridPolicy, Sweep,
    ViscousProblem,
};

fn scalar_sweep() -> &'static Sweep {
    static SWEEP: OnceLock<Sweep> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let p = ViscousProblem::new(scalar_model()).unwrap();
        let eps: Vec<f64> = (0..7).map(|k| 0.05 * 0.5f64.powi(k)).collect();
        continuation_sweep(&p, &GridPolicy::default(), &eps).unwrap()
    })
}

#[test]
fn zero_target_gradient_gives_zero_adjoint() {
    // w ≡ 0 solves the scalar problem with zero data, and p'(0) = 0.
    let grid = Grid::uniform(64).unwrap();
    let primal = FieldSolution {
        grid,
        values: vec![State::scalar(0.0); 65],
        epsilon: 0.05,
        converged: true,
        newton_iterations: 0,
        final_residual_norm: 0.0,
        under_resolved: false,
    };
    let z = solve_viscous_adjoint(&scalar_model(), &primal, BcPolicy::DirichletZero).unwrap();
    assert!(z.values.iter().all(|v| v[0] == 0.0));
}

#[test]
fn scalar_adjoint_at_shock_approaches_interior_value() {
    let p = ViscousProblem::new(scalar_model()).unwrap();
    let s = continuation_sweep(&p, &GridPolicy::default(), &[8e-3, 4e-3, 2e-3, 1e-3]).unwrap();
    let primal = s.solutions.last().unwrap();
    let z = solve_viscous_adjoint(&p.model, primal, BcPolicy::DirichletZero).unwrap();
    assert!(z.residual_norm < ADJOINT_TOLERANCE);
    let r = detect_transition_region(primal, 0.05).unwrap();
    let target = (1.024 / 3.0) / 1.6;
    assert!((z.interpolate(r.alpha_hat)[0] - target).abs() < 0.05);
    assert_eq!(z.primal_ref, primal_fingerprint(primal));
    assert_eq!(z.grid, primal.grid);
}

#[test]
fn adjoint_is_the_transpose_of_the_linearization() {
    let m = scalar_model();
    for sol in &scalar_sweep().solutions[..4] {
        let z = solve_viscous_adjoint(&m, sol, BcPolicy::DirichletZero).unwrap();
        let jac = assemble_jacobian(&m, &sol.grid, sol.epsilon, &sol.values).unwrap();
        let n = sol.grid.intervals();
        let h = sol.grid.h();
        let dw: Vec<f64> = (0..=n)
            .map(|i| {
                let x = sol.grid.x(i);
                (3.0 * x).sin() * x * (1.0 - x)
            })
            .collect();
        let ldw = jac.mul_vec(&dw);
        let lhs: f64 = (1..n).map(|i| h * sol.values[i][0].powi(2) * dw[i]).sum();
        let rhs: f64 = (1..n).map(|i| h * z.values[i][0] * ldw[i]).sum();
        let norm = dw.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!((lhs - rhs).abs() <= 1e-8 * norm, "eps {}: {}", sol.epsilon, (lhs - rhs).abs());
    }
}

#[test]
fn adjoint_stays_lipschitz_in_the_layer() {
    let m = scalar_model();
    let v: Vec<f64> = scalar_sweep().solutions[3..]
        .iter()
        .map(|sol| {
            let z = solve_viscous_adjoint(&m, sol, BcPolicy::DirichletZero).unwrap();
            let r = detect_transition_region(sol, 0.05).unwrap();
            let h = sol.grid.h();
            (r.i_minus..r.i_plus).map(|i| ((z.values[i + 1][0] - z.values[i][0]) / h).abs()).fold(0.0, f64::max)
        })
        .collect();
    let (lo, hi) = v.iter().fold((f64::MAX, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi / lo <= 3.0, "{v:?}");
}

#[test]
fn adjoint_grid_refinement_is_second_order() {
    let p = ViscousProblem::new(scalar_model()).unwrap();
    let eps = 0.05;
    let zs: Vec<AdjointSolution> = [160, 320, 640]
        .iter()
        .map(|&n| {
            let sol = solve_viscous_primal(&p, &Grid::uniform(n).unwrap(), eps, None).unwrap();
            solve_viscous_adjoint(&p.model, &sol, BcPolicy::DirichletZero).unwrap()
        })
        .collect();
    let diff = |a: &AdjointSolution, b: &AdjointSolution| {
        (0..=160)
            .map(|i| (a.values[i * a.grid.intervals() / 160] - b.values[i * b.grid.intervals() / 160]).norm_inf())
            .fold(0.0, f64::max)
    };
    let order = (diff(&zs[0], &zs[1]) / diff(&zs[1], &zs[2])).log2();
    assert!((1.7..=2.3).contains(&order), "{order}");
}

#[test]
fn euler_adjoint_policies() {
    let p = ViscousProblem::new(euler_model()).unwrap();
    let eps = 0.01;
    let sol = solve_viscous_primal(&p, &GridPolicy::default().grid_for(eps).unwrap(), eps, None).unwrap();
    for policy in [BcPolicy::DirichletZero, BcPolicy::LinearizedCharacteristic] {
        let z = solve_viscous_adjoint(&p.model, &sol, policy).unwrap();
        assert!(z.residual_norm < ADJOINT_TOLERANCE, "{policy}: {}", z.residual_norm);
        assert!(adjoint_residual(&p.model, &sol, &z.values).unwrap() < ADJOINT_TOLERANCE);
        assert!(z.values.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn characteristic_policy_needs_euler() {
    let p = ViscousProblem::new(scalar_model()).unwrap();
    let sol = solve_viscous_primal(&p, &Grid::uniform(400).unwrap(), 0.05, None).unwrap();
    assert!(solve_viscous_adjoint(&p.model, &sol, BcPolicy::LinearizedCharacteristic).is_err());
    let mut bad = sol.clone();
    bad.converged = false;
    assert!(solve_viscous_adjoint(&p.model, &bad, BcPolicy::DirichletZero).is_err());
}

#[test]
fn oracle_constant_coefficient() {
    let c = 0.8;
    let k = Arc::new(AffineBranch { intercept: c, slope: 0.0 });
    let w = PiecewiseSolution::new(k.clone(), k, 0.5).unwrap();
    let z0 = 0.3;
    let oracle = scalar_inviscid_adjoint_oracle(&scalar_model(), &w, (0.1, z0)).unwrap();
    for i in 0..=50 {
        let x = i as f64 / 50.0;
        let exact = c * c + (z0 - c * c) * ((x - 0.1) / c).exp();
        assert!((oracle.eval(x) - exact).abs() < 1e-8, "x={x}");
    }
}

#[test]
fn oracle_from_interior_value_is_closed_form() {
    let w = manufactured_scalar_solution();
    let oracle = scalar_inviscid_adjoint_oracle(&scalar_model(), &w, (0.4, 0.64 / 3.0)).unwrap();
    for i in 0..=100 {
        let x = i as f64 / 100.0;
        let wx = w.eval(x)[0];
        assert!((oracle.eval(x) - wx * wx / 3.0).abs() < 1e-10, "x={x}");
    }
    assert!((oracle.at_shock() - 0.213_333_333_333_333).abs() < 1e-12);
}

#[test]
fn oracle_off_shock_anchor_is_continuous() {
    let w = manufactured_scalar_solution();
    let m = scalar_model();
    let exact = |x: f64| {
        let v = w.eval(x)[0];
        v * v / 3.0 - 0.05 / v.abs()
    };
    for xa in [0.1, 0.7] {
        let oracle = scalar_inviscid_adjoint_oracle(&m, &w, (xa, exact(xa))).unwrap();
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((oracle.eval(x) - exact(x)).abs() < 1e-9, "anchor {xa}, x={x}");
        }
        assert!((oracle.eval_side(0.4, Side::Left) - oracle.eval_side(0.4, Side::Right)).abs() < 1e-12);
    }
}

#[test]
fn oracle_rejects_sign_change() {
    let w = PiecewiseSolution::new(
        Arc::new(AffineBranch { intercept: 0.2, slope: -1.0 }),
        Arc::new(AffineBranch { intercept: -0.5, slope: -1.0 }),
        0.4,
    )
    .unwrap();
    assert!(scalar_inviscid_adjoint_oracle(&scalar_model(), &w, (0.1, 0.0)).is_err());
}
