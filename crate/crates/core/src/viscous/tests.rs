use std::sync::OnceLock;

use super::*;
use crate::analysis::fit_convergence_rate;
use crate::models::{euler_model, scalar_model};
use crate::reference::manufactured_scalar_solution;

fn scalar_problem() -> ViscousProblem {
    ViscousProblem::new(scalar_model()).unwrap()
}

fn scalar_sweep_eps() -> Vec<f64> {
    (0..7).map(|k| 0.05 * 0.5f64.powi(k)).collect()
}

fn scalar_sweep() -> &'static Sweep {
    static SWEEP: OnceLock<Sweep> = OnceLock::new();
    SWEEP.get_or_init(|| continuation_sweep(&scalar_problem(), &GridPolicy::default(), &scalar_sweep_eps()).unwrap())
}

/// Solution at ε = 1e-3, h = ε/8, reached by continuation.
fn scalar_at_1e3() -> &'static FieldSolution {
    static SOL: OnceLock<FieldSolution> = OnceLock::new();
    SOL.get_or_init(|| {
        let s = continuation_sweep(&scalar_problem(), &GridPolicy::default(), &[8e-3, 4e-3, 2e-3, 1e-3]).unwrap();
        s.solutions.last().unwrap().clone()
    })
}

fn off_layer_error(sol: &FieldSolution) -> f64 {
    let w = manufactured_scalar_solution();
    (0..sol.grid.len())
        .filter(|&i| (sol.grid.x(i) - 0.4).abs() > 0.1)
        .map(|i| (sol.values[i] - w.eval(sol.grid.x(i))).norm_inf())
        .fold(0.0, f64::max)
}

#[test]
fn grid_basics() {
    assert!(Grid::uniform(15).is_err());
    let g = Grid::uniform(16).unwrap();
    assert_eq!(g.len(), 17);
    assert_eq!(g.x(16), 1.0);
    assert_eq!(g.locate(1.0), (15, 1.0));
    assert!(Grid::from_nodes(&g.nodes()).is_ok());
    let mut bad = g.nodes();
    bad[3] += 1e-6;
    assert!(Grid::from_nodes(&bad).is_err());
    let p = GridPolicy::default();
    assert_eq!(p.grid_for(0.01).unwrap().intervals(), 800);
    let capped = GridPolicy { kappa: 8.0, max_nodes: 1001 };
    assert_eq!(capped.grid_for(1e-5).unwrap().len(), 1001);
}

#[test]
fn scalar_cold_solve_matches_inviscid_off_layer() {
    let p = scalar_problem();
    let grid = Grid::uniform(1000).unwrap();
    let sol = solve_viscous_primal(&p, &grid, 1e-2, None).unwrap();
    assert!(sol.converged && sol.final_residual_norm < 1e-10);
    assert!(!sol.under_resolved);
    assert!(off_layer_error(&sol) < 0.05, "{}", off_layer_error(&sol));
    assert_eq!(sol.values[0][0], 1.2);
    assert_eq!(sol.values[1000][0], -1.4);
}

#[test]
fn converged_init_needs_at_most_one_iteration() {
    let p = scalar_problem();
    let grid = Grid::uniform(400).unwrap();
    let sol = solve_viscous_primal(&p, &grid, 2e-2, None).unwrap();
    let again = solve_viscous_primal(&p, &grid, 2e-2, Some(&sol)).unwrap();
    assert!(again.newton_iterations <= 1);
    assert!(again.converged);
}

/// The cold-start profile `tanh((x − α)/(5ε))` has the width of the converged layer at
/// `2ε`, so a warm start from the previous sweep entry begins from an equally good guess.
#[test]
fn warm_start_is_no_worse_than_cold_start() {
    let p = scalar_problem();
    let pol = GridPolicy::default();
    let coarse = solve_viscous_primal(&p, &pol.grid_for(2e-2).unwrap(), 2e-2, None).unwrap();
    let grid = pol.grid_for(1e-2).unwrap();
    let cold = solve_viscous_primal(&p, &grid, 1e-2, None).unwrap();
    let warm = solve_viscous_primal(&p, &grid, 1e-2, Some(&coarse)).unwrap();
    assert!(cold.converged && warm.converged);
    assert!(warm.newton_iterations <= cold.newton_iterations, "warm {} cold {}", warm.newton_iterations, cold.newton_iterations);
}

#[test]
fn under_resolution_is_flagged_not_fatal() {
    let p = scalar_problem();
    let sol = solve_viscous_primal(&p, &Grid::uniform(100).unwrap(), 2e-2, None).unwrap();
    assert!(sol.under_resolved);
}

#[test]
fn singleton_sweep_is_a_single_solve() {
    let p = scalar_problem();
    let pol = GridPolicy::default();
    let s = continuation_sweep(&p, &pol, &[0.05]).unwrap();
    let d = solve_viscous_primal(&p, &pol.grid_for(0.05).unwrap(), 0.05, None).unwrap();
    assert_eq!(s.solutions.len(), 1);
    assert_eq!(s.solutions[0], d);
}

#[test]
fn sweep_validation() {
    let p = scalar_problem();
    let pol = GridPolicy::default();
    assert!(continuation_sweep(&p, &pol, &[]).is_err());
    assert!(continuation_sweep(&p, &pol, &[0.01, 0.02]).is_err());
    assert!(continuation_sweep(&p, &pol, &[0.01, -0.02]).is_err());
}

#[test]
fn scalar_sweep_converges_and_locates_shock() {
    let s = scalar_sweep();
    assert!(s.diagnostic.is_none());
    assert_eq!(s.solutions.len(), 7);
    let mut drift = Vec::new();
    for sol in &s.solutions {
        assert!(sol.converged);
        let r = detect_transition_region(sol, 0.05).unwrap();
        drift.push((r.alpha_hat - 0.4).abs());
    }
    for k in 3..6 {
        assert!(drift[k + 1] <= drift[k] + 1e-15, "{drift:?}");
    }
}

#[test]
fn sweep_is_cauchy_and_off_layer_error_decreases() {
    let s = &scalar_sweep().solutions;
    let probe: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).filter(|x| (x - 0.4).abs() > 0.1).collect();
    let mut gaps = Vec::new();
    for pair in s.windows(2) {
        gaps.push(probe.iter().map(|&x| (pair[0].interpolate(x) - pair[1].interpolate(x)).norm_inf()).fold(0.0, f64::max));
    }
    for k in 0..gaps.len() - 1 {
        assert!(gaps[k + 1] < gaps[k], "{gaps:?}");
    }
    let errs: Vec<f64> = s.iter().map(off_layer_error).collect();
    // The branches are affine, so away from the layer the discrete solution is exact up to
    // an exponentially small tail that underflows to zero for the smallest ε.
    for k in 0..errs.len() - 1 {
        assert!(errs[k + 1] < errs[k] || errs[k + 1] == 0.0, "{errs:?}");
    }
}

#[test]
fn discrete_conservation_holds() {
    let m = scalar_model();
    for sol in &scalar_sweep().solutions {
        let d = conservation_defect(&m, sol).unwrap();
        assert!(d < 1e-9, "eps {} defect {d}", sol.epsilon);
    }
}

#[test]
fn layer_gradient_scales_like_inverse_epsilon() {
    let s = &scalar_sweep().solutions;
    let v: Vec<f64> = s[3..].iter().map(|sol| detect_transition_region(sol, 0.05).unwrap().max_gradient * sol.epsilon).collect();
    let (lo, hi) = v.iter().fold((f64::MAX, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi / lo <= 3.0, "{v:?}");
}

#[test]
fn region_width_scales_with_epsilon() {
    let pairs: Vec<(f64, f64)> = scalar_sweep()
        .solutions
        .iter()
        .map(|sol| (sol.epsilon, detect_transition_region(sol, 0.05).unwrap()))
        .filter(|(_, r)| !r.capped)
        .map(|(e, r)| (e, r.alpha_plus - r.alpha_minus))
        .collect();
    assert!(pairs.len() >= 3);
    let fit = fit_convergence_rate(&pairs).unwrap();
    assert!((0.8..=1.2).contains(&fit.slope), "{fit:?}");
}

#[test]
fn region_at_small_epsilon() {
    let sol = scalar_at_1e3();
    let r = detect_transition_region(sol, 0.05).unwrap();
    assert!((r.alpha_hat - 0.4).abs() <= 5e-3);
    assert!(r.alpha_minus < r.alpha_hat && r.alpha_hat < r.alpha_plus);
    assert!(!r.capped);
    let g = sol.component(0);
    let h = sol.grid.h();
    for i in [r.i_minus, r.i_plus] {
        let gi = ((g[i + 1] - g[i - 1]) / (2.0 * h)).abs();
        assert!(gi < 0.05 * r.max_gradient);
    }
    let tight = detect_transition_region(sol, 0.999).unwrap();
    assert!(tight.alpha_plus - tight.alpha_minus <= 2.0 * h + 1e-15);
    assert!(detect_transition_region(sol, 1.0).is_err());
}

#[test]
fn boundary_maximum_is_not_a_layer() {
    let grid = Grid::uniform(32).unwrap();
    let values = (0..=32).map(|i| State::scalar((-(i as f64) / 2.0).exp())).collect();
    let sol = FieldSolution {
        grid,
        values,
        epsilon: 0.01,
        converged: true,
        newton_iterations: 0,
        final_residual_norm: 0.0,
        under_resolved: false,
    };
    assert!(matches!(detect_transition_region(&sol, 0.05), Err(Error::NoInteriorLayer(_))));
}

#[test]
fn smooth_jump_examples() {
    let sol = scalar_at_1e3();
    let r = detect_transition_region(sol, 0.05).unwrap();
    let constant = vec![State::scalar(3.0); sol.grid.len()];
    assert_eq!(smooth_jump(sol, &constant, &r).unwrap().endpoint[0], 0.0);
    let jw = smooth_jump(sol, &sol.values, &r).unwrap();
    assert!((jw.endpoint[0] + 1.6).abs() < 0.05, "{jw:?}");
    assert!(jw.discrepancy() < 1e-10 && !jw.interpolated);
    let p: Vec<f64> = sol.values.iter().map(|w| w[0].powi(3) / 3.0).collect();
    let jp = smooth_jump_scalar(sol, &p, &r).unwrap();
    assert!((jp.endpoint[0] + 1.024 / 3.0).abs() < 0.05, "{jp:?}");
    assert!(jp.discrepancy() < 1e-10);
}

#[test]
fn smooth_jump_off_grid_interpolates() {
    let sol = scalar_at_1e3();
    let h = sol.grid.h();
    let mut r = detect_transition_region(sol, 0.05).unwrap();
    r.alpha_minus += 0.3 * h;
    r.alpha_plus -= 0.6 * h;
    let j = smooth_jump(sol, &sol.values, &r).unwrap();
    assert!(j.interpolated);
    assert!(j.discrepancy() < 1e-10);
    let lin: Vec<State> = (0..sol.grid.len()).map(|i| State::scalar(2.0 * sol.grid.x(i))).collect();
    let jl = smooth_jump(sol, &lin, &r).unwrap();
    assert!((jl.endpoint[0] - 2.0 * (r.alpha_plus - r.alpha_minus)).abs() < 1e-12);
}

#[test]
fn grid_refinement_is_second_order() {
    let p = scalar_problem();
    let eps = 0.05;
    let sols: Vec<FieldSolution> = [160, 320, 640]
        .iter()
        .map(|&n| solve_viscous_primal(&p, &Grid::uniform(n).unwrap(), eps, None).unwrap())
        .collect();
    let diff = |a: &FieldSolution, b: &FieldSolution| {
        (0..=160).map(|i| (a.values[i * a.grid.intervals() / 160] - b.values[i * b.grid.intervals() / 160]).norm_inf()).fold(0.0, f64::max)
    };
    let order = (diff(&sols[0], &sols[1]) / diff(&sols[1], &sols[2])).log2();
    assert!((1.7..=2.3).contains(&order), "{order}");
}

#[test]
fn checkpoint_round_trip() {
    let p = scalar_problem();
    let sol = solve_viscous_primal(&p, &Grid::uniform(64).unwrap(), 0.05, None).unwrap();
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, &sol).unwrap();
    assert_eq!(&buf[..4], b"SAJ1");
    assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 65);
    assert_eq!(buf.len(), 20 + 8 * 65 * 2);
    let back = read_checkpoint(&buf[..]).unwrap();
    assert_eq!(back.values, sol.values);
    assert_eq!(back.epsilon, sol.epsilon);
    assert_eq!(back.grid, sol.grid);
    assert!(read_checkpoint(&buf[..buf.len() - 1]).is_err());
    let mut csv = Vec::new();
    write_field_csv(&mut csv, &sol.grid, &sol.values, sol.epsilon, "w").unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("x,w0,epsilon\n"));
    assert_eq!(text.lines().count(), 66);
}

#[test]
fn euler_cold_solve_converges() {
    let p = ViscousProblem::new(euler_model()).unwrap();
    let eps = 0.01;
    let sol = solve_viscous_primal(&p, &GridPolicy::default().grid_for(eps).unwrap(), eps, None).unwrap();
    assert!(sol.converged, "{}", sol.final_residual_norm);
    let r = detect_transition_region(&sol, 0.05).unwrap();
    assert!((r.alpha_hat - p.reference.alpha()).abs() < 0.1, "{r:?}");
    assert!(conservation_defect(&p.model, &sol).unwrap() < 1e-9);
}
