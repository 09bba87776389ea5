//! Manufactured scalar balance law: `f(w) = w²/2`, `S(x, w) = w`, `p(w) = w³/3`.

use serde::{Deserialize, Serialize};

/// Dirichlet data `w(0)`, `w(1)` of the scalar model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarBoundary {
    pub left_value: f64,
    pub right_value: f64,
}

impl Default for ScalarBoundary {
    fn default() -> Self {
        Self { left_value: 1.2, right_value: -1.4 }
    }
}

#[inline]
pub fn flux(w: f64) -> f64 {
    0.5 * w * w
}

#[inline]
pub fn flux_derivative(w: f64) -> f64 {
    w
}

#[inline]
pub fn source(_x: f64, w: f64) -> f64 {
    w
}

#[inline]
pub fn target(w: f64) -> f64 {
    w * w * w / 3.0
}

#[inline]
pub fn target_derivative(w: f64) -> f64 {
    w * w
}
