use crate::error::{Error, Result};

/// The quadratic map `ξ(x) = x + c·x(1 − x)` with `c = (β − α)/(α(1 − α))`.
///
/// It fixes 0 and 1 and sends `α` to `β`; restricted to `[0, α]` it is `ξ₁`,
/// restricted to `[α, 1]` it is `ξ₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateTransform {
    alpha: f64,
    beta: f64,
    c: f64,
}

pub fn make_transform(alpha: f64, beta: f64) -> Result<CoordinateTransform> {
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidInput(format!("{name} = {v} must lie in (0, 1)")));
        }
    }
    let c = (beta - alpha) / (alpha * (1.0 - alpha));
    // ξ' = 1 + c(1 − 2x) must stay positive on [0, 1].
    if c.abs() >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "shift {} is too large for a monotone transform at alpha = {alpha}",
            beta - alpha
        )));
    }
    Ok(CoordinateTransform { alpha, beta, c })
}

impl CoordinateTransform {
    pub fn identity(alpha: f64) -> Result<Self> {
        make_transform(alpha, alpha)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    #[inline]
    pub fn xi(&self, x: f64) -> f64 {
        x + self.c * x * (1.0 - x)
    }

    pub fn xi1(&self, x: f64) -> f64 {
        debug_assert!((0.0..=self.alpha).contains(&x));
        self.xi(x)
    }

    pub fn xi2(&self, x: f64) -> f64 {
        debug_assert!((self.alpha..=1.0).contains(&x));
        self.xi(x)
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        1.0 + self.c * (1.0 - 2.0 * x)
    }

    #[inline]
    pub fn second_derivative(&self, _x: f64) -> f64 {
        -2.0 * self.c
    }

    /// `ξ⁻¹(y)`, the root of `c·x² − (1 + c)·x + y = 0` in `[0, 1]`.
    #[inline]
    pub fn inverse(&self, y: f64) -> f64 {
        let b = 1.0 + self.c;
        2.0 * y / (b + (b * b - 4.0 * self.c * y).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_when_beta_equals_alpha() {
        let t = make_transform(0.4, 0.4).unwrap();
        for x in [0.0, 0.13, 0.4, 0.77, 1.0] {
            assert_eq!(t.xi(x), x);
            assert_eq!(t.derivative(x), 1.0);
        }
    }

    #[test]
    fn endpoint_values() {
        let t = make_transform(0.4, 0.42).unwrap();
        assert!((t.xi1(0.4) - 0.42).abs() < 1e-15);
        assert!((t.xi2(0.4) - 0.42).abs() < 1e-15);
        assert_eq!(t.xi(0.0), 0.0);
        assert!((t.xi(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn derivative_deviation_is_small() {
        let t = make_transform(0.4, 0.42).unwrap();
        let sup = (0..=1000).map(|i| (t.derivative(i as f64 / 1000.0) - 1.0).abs()).fold(0.0, f64::max);
        assert!(sup < 0.2, "{sup}");
    }

    #[test]
    fn shift_bound() {
        let t = make_transform(0.4, 0.41).unwrap();
        let sup = (0..=10_000).map(|i| {
            let x = i as f64 / 10_000.0;
            (t.xi(x) - x).abs()
        });
        assert!(sup.fold(0.0, f64::max) < 0.011);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_transform(0.0, 0.5).is_err());
        assert!(make_transform(0.5, 1.0).is_err());
        assert!(make_transform(0.1, 0.9).is_err());
    }

    #[test]
    fn derivative_matches_central_differences() {
        let t = make_transform(0.3, 0.35).unwrap();
        for i in 1..100 {
            let x = i as f64 / 100.0;
            let fd = (t.xi(x + 1e-6) - t.xi(x - 1e-6)) / 2e-6;
            assert!((fd - t.derivative(x)).abs() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn inverse_round_trip(alpha in 0.05f64..0.95, shift in -0.04f64..0.04, x in 0.0f64..1.0) {
            let beta = alpha + shift;
            prop_assume!(beta > 0.0 && beta < 1.0);
            let t = make_transform(alpha, beta).unwrap();
            prop_assert!((t.inverse(t.xi(x)) - x).abs() < 1e-13);
            prop_assert!(t.derivative(x) > 0.0);
        }

        #[test]
        fn shift_is_linear_in_displacement(alpha in 0.1f64..0.9, shift in prop::sample::select(vec![1e-2, 1e-3, 1e-4])) {
            let t = make_transform(alpha, alpha + shift * 0.5).unwrap();
            let sup = (0..=2000).map(|i| { let x = i as f64 / 2000.0; (t.xi(x) - x).abs() }).fold(0.0, f64::max);
            prop_assert!(sup / (shift * 0.5) <= 3.0);
        }
    }
}
