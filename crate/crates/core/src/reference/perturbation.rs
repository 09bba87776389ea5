//! Approximate solutions `v` built from an exact `w` by a smooth bump and a shock shift.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::state::State;

use super::{make_transform, Branch, CoordinateTransform, PiecewiseSolution, Side, PROBE_EXCLUSION, PROBE_POINTS};

/// Bump `g(x) = sin(πx)·|w(x)|` componentwise; vanishes at both ends of the domain.
fn bump(w: &State, wx: &State, x: f64) -> (State, State) {
    let (s, c) = (PI * x).sin_cos();
    let g = w.map(|v| s * v.abs());
    let mut gx = *w;
    for k in 0..w.dim() {
        gx[k] = PI * c * w[k].abs() + s * w[k].signum() * wx[k];
    }
    (g, gx)
}

/// Branch of `v` defined through `v(ξ(x)) = w(x) + ν·g(x)`.
#[derive(Debug, Clone)]
pub struct PerturbedBranch {
    base: Arc<dyn Branch>,
    transform: CoordinateTransform,
    nu: f64,
}

impl Branch for PerturbedBranch {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, y: f64) -> State {
        let x = self.transform.inverse(y);
        let w = self.base.value(x);
        if self.nu == 0.0 {
            return w;
        }
        let (g, _) = bump(&w, &self.base.derivative(x), x);
        w + g * self.nu
    }

    fn derivative(&self, y: f64) -> State {
        let x = self.transform.inverse(y);
        let w = self.base.value(x);
        let wx = self.base.derivative(x);
        let (_, gx) = bump(&w, &wx, x);
        (wx + gx * self.nu) * (1.0 / self.transform.derivative(x))
    }
}

#[derive(Debug, Clone)]
pub struct PerturbationFamily {
    pub base: PiecewiseSolution,
    pub nu: f64,
    pub alpha_bar: f64,
    pub transform: CoordinateTransform,
    pub v: PiecewiseSolution,
}

impl PerturbationFamily {
    pub fn alpha(&self) -> f64 {
        self.base.alpha()
    }

    pub fn beta(&self) -> f64 {
        self.v.alpha()
    }

    /// `ν·g(x)` on the given branch of the base solution.
    pub fn bump(&self, x: f64, side: Side) -> State {
        let w = self.base.eval_side(x, side);
        let (g, _) = bump(&w, &self.base.derivative_side(x, side), x);
        g * self.nu
    }
}

/// Family with the default bump and shock shift `alpha_bar`.
pub fn generate_perturbation(base: &PiecewiseSolution, nu: f64, alpha_bar: f64) -> Result<PerturbationFamily> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::InvalidInput(format!("nu = {nu} must be a nonnegative number")));
    }
    let beta = base.alpha() + alpha_bar;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidInput(format!("shifted shock {beta} lies outside (0, 1)")));
    }
    let transform = make_transform(base.alpha(), beta)?;
    let left = PerturbedBranch { base: base.left_branch().clone(), transform, nu };
    let right = PerturbedBranch { base: base.right_branch().clone(), transform, nu };
    let v = PiecewiseSolution::new(Arc::new(left), Arc::new(right), beta)?;
    Ok(PerturbationFamily { base: base.clone(), nu, alpha_bar, transform, v })
}

/// Family with `ᾱ = coupling·ν`.
pub fn generate_perturbation_with(base: &PiecewiseSolution, nu: f64, coupling: f64) -> Result<PerturbationFamily> {
    generate_perturbation(base, nu, coupling * nu)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosenessThresholds {
    pub nu: f64,
    pub xi_derivative: f64,
    pub mu: f64,
    pub xi_shift: f64,
    pub pointwise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosenessReport {
    /// `sup |w(x) − v(ξ(x))|` over both branches.
    pub nu_measured: f64,
    /// `sup |ξ'(x) − 1|`.
    pub xi_derivative_deviation: f64,
    /// Sup of the off-shock residual `|f(v)_x + S(v)|`.
    pub mu: f64,
    /// `sup |ξ''|`, recorded without a threshold.
    pub xi_second_derivative: f64,
    /// `sup |ξ(x) − x|`.
    pub xi_shift: f64,
    /// `sup |v(x) − w(x)|` outside the interval between the two shocks.
    pub pointwise_gap: f64,
    pub passes: bool,
    pub xi_shift_ok: bool,
    pub pointwise_ok: bool,
}

pub fn check_closeness(
    w: &PiecewiseSolution,
    v: &PiecewiseSolution,
    transform: &CoordinateTransform,
    model: &ModelSpec,
    thresholds: &ClosenessThresholds,
) -> Result<ClosenessReport> {
    if transform.alpha() != w.alpha() || transform.beta() != v.alpha() {
        return Err(Error::InvalidInput(format!(
            "transform maps {} to {}, but the shocks are at {} and {}",
            transform.alpha(),
            transform.beta(),
            w.alpha(),
            v.alpha()
        )));
    }
    let (lo, hi) = (w.alpha().min(v.alpha()), w.alpha().max(v.alpha()));
    let mut r = ClosenessReport {
        nu_measured: 0.0,
        xi_derivative_deviation: 0.0,
        mu: 0.0,
        xi_second_derivative: 0.0,
        xi_shift: 0.0,
        pointwise_gap: 0.0,
        passes: false,
        xi_shift_ok: false,
        pointwise_ok: false,
    };
    for i in 0..=PROBE_POINTS {
        let x = i as f64 / PROBE_POINTS as f64;
        r.xi_derivative_deviation = r.xi_derivative_deviation.max((transform.derivative(x) - 1.0).abs());
        r.xi_second_derivative = r.xi_second_derivative.max(transform.second_derivative(x).abs());
        r.xi_shift = r.xi_shift.max((transform.xi(x) - x).abs());
        if (x - w.alpha()).abs() >= PROBE_EXCLUSION {
            let side = w.side_of(x);
            let wx = w.eval_side(x, side);
            let vx = v.eval_side(transform.xi(x), side);
            r.nu_measured = r.nu_measured.max((wx - vx).norm_inf());
        }
        if (x - v.alpha()).abs() >= PROBE_EXCLUSION {
            let res = model.smooth_residual(x, &v.eval(x), &v.derivative(x))?;
            r.mu = r.mu.max(res.norm_inf());
        }
        if x < lo - PROBE_EXCLUSION || x > hi + PROBE_EXCLUSION {
            r.pointwise_gap = r.pointwise_gap.max((v.eval(x) - w.eval(x)).norm_inf());
        }
    }
    r.passes = r.nu_measured <= thresholds.nu && r.xi_derivative_deviation <= thresholds.xi_derivative && r.mu <= thresholds.mu;
    r.xi_shift_ok = r.xi_shift <= thresholds.xi_shift;
    r.pointwise_ok = r.pointwise_gap <= thresholds.pointwise;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{euler_model, scalar_model};
    use crate::reference::{exact_solution, manufactured_scalar_solution};

    fn loose() -> ClosenessThresholds {
        ClosenessThresholds { nu: 1.0, xi_derivative: 1.0, mu: 1.0, xi_shift: 1.0, pointwise: 1.0 }
    }

    #[test]
    fn zero_perturbation_reproduces_base() {
        let w = manufactured_scalar_solution();
        let fam = generate_perturbation(&w, 0.0, 0.0).unwrap();
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert_eq!(fam.v.eval(x), w.eval(x));
        }
        let rep = check_closeness(&w, &fam.v, &fam.transform, &scalar_model(), &loose()).unwrap();
        assert_eq!(rep.nu_measured, 0.0);
        assert_eq!(rep.xi_derivative_deviation, 0.0);
        assert!(rep.mu < 1e-15);
        assert!(rep.passes);
    }

    #[test]
    fn boundary_values_are_unchanged() {
        let w = manufactured_scalar_solution();
        let fam = generate_perturbation(&w, 1e-2, 5e-3).unwrap();
        assert!((fam.v.eval(0.0) - w.eval(0.0)).norm_inf() < 1e-15);
        assert!((fam.v.eval(1.0) - w.eval(1.0)).norm_inf() < 1e-15);
        assert!((fam.beta() - 0.405).abs() < 1e-15);
    }

    #[test]
    fn shock_shift_alone_gives_linear_residual() {
        let w = manufactured_scalar_solution();
        let m = scalar_model();
        let mus: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
            .iter()
            .map(|&ab| {
                let fam = generate_perturbation(&w, 0.0, ab).unwrap();
                check_closeness(&w, &fam.v, &fam.transform, &m, &loose()).unwrap().mu
            })
            .collect();
        assert!(mus[0] > 0.0);
        for k in 0..2 {
            let ratio = mus[k] / mus[k + 1];
            assert!((ratio - 2.0).abs() < 0.05, "{ratio}");
        }
    }

    #[test]
    fn measured_nu_is_of_order_nu() {
        let w = manufactured_scalar_solution();
        let fam = generate_perturbation(&w, 1e-3, 1e-3).unwrap();
        let rep = check_closeness(&w, &fam.v, &fam.transform, &scalar_model(), &loose()).unwrap();
        assert!(rep.nu_measured <= 2e-3);
        assert!(rep.nu_measured / 1e-3 >= 0.5 && rep.nu_measured / 1e-3 <= 2.0);
    }

    #[test]
    fn pointwise_gap_scales_with_nu() {
        let w = manufactured_scalar_solution();
        let m = scalar_model();
        let c: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&nu| {
                let fam = generate_perturbation_with(&w, nu, 0.5).unwrap();
                check_closeness(&w, &fam.v, &fam.transform, &m, &loose()).unwrap().pointwise_gap / nu
            })
            .collect();
        let (lo, hi) = c.iter().fold((f64::MAX, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi / lo <= 2.0, "{c:?}");
    }

    #[test]
    fn negative_shift_is_supported() {
        let w = manufactured_scalar_solution();
        let fam = generate_perturbation(&w, 1e-3, -2e-3).unwrap();
        assert!((fam.beta() - 0.398).abs() < 1e-15);
        let rep = check_closeness(&w, &fam.v, &fam.transform, &scalar_model(), &loose()).unwrap();
        assert!(rep.nu_measured < 2e-3 && rep.xi_shift < 3.0 * 2e-3);
    }

    #[test]
    fn mismatched_shock_endpoints_are_rejected() {
        let w = manufactured_scalar_solution();
        let fam = generate_perturbation(&w, 1e-3, 1e-3).unwrap();
        let other = make_transform(0.4, 0.45).unwrap();
        assert!(check_closeness(&w, &fam.v, &other, &scalar_model(), &loose()).is_err());
        assert!(generate_perturbation(&w, 1e-3, 0.7).is_err());
        assert!(generate_perturbation(&w, -1.0, 0.0).is_err());
    }

    #[test]
    fn perturbed_derivative_matches_central_differences() {
        let w = exact_solution(&euler_model()).unwrap();
        let fam = generate_perturbation(&w, 1e-2, 5e-3).unwrap();
        for y in [0.1, 0.6, 0.8, 0.95] {
            let h = 1e-6;
            let fd = (fam.v.eval(y + h) - fam.v.eval(y - h)) * (0.5 / h);
            assert!((fd - fam.v.derivative(y)).norm_inf() < 1e-6, "y={y}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn single_jump_at_beta(nu in 0.0f64..0.02, ab in -0.02f64..0.02) {
                let w = manufactured_scalar_solution();
                let fam = generate_perturbation(&w, nu, ab).unwrap();
                let beta = fam.beta();
                let n = 4000;
                let mut jumps = Vec::new();
                for i in 0..n {
                    let (a, b) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
                    if (fam.v.eval(b) - fam.v.eval(a)).norm_inf() > 0.5 {
                        jumps.push((a, b));
                    }
                }
                prop_assert_eq!(jumps.len(), 1);
                prop_assert!(jumps[0].0 <= beta && beta <= jumps[0].1);
            }
        }
    }
}
