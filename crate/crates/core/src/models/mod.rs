//! Balance-law models `f(w)_x + S(x, w) = 0` with target integrand `p(w)`.

pub mod euler;
pub mod scalar;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Matrix, State};

pub use euler::{EulerBoundary, EulerParams, NozzleGeometry};
pub use scalar::ScalarBoundary;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundaryData {
    Scalar(ScalarBoundary),
    Euler(EulerBoundary),
}

/// A concrete balance law. Both variants are plain data, so evaluation is reentrant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelSpec {
    Scalar { boundary: ScalarBoundary },
    Euler { params: EulerParams, geometry: NozzleGeometry, boundary: EulerBoundary },
}

/// The manufactured scalar model with `w(0) = 1.2`, `w(1) = −1.4`.
pub fn scalar_model() -> ModelSpec {
    ModelSpec::Scalar { boundary: ScalarBoundary::default() }
}

/// Euler nozzle model with default constants, geometry and boundary data.
pub fn euler_model() -> ModelSpec {
    ModelSpec::Euler {
        params: EulerParams::default(),
        geometry: NozzleGeometry::default(),
        boundary: EulerBoundary::default(),
    }
}

impl ModelSpec {
    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::Scalar { .. } => 1,
            ModelSpec::Euler { .. } => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Scalar { .. } => "scalar",
            ModelSpec::Euler { .. } => "euler-nozzle",
        }
    }

    pub fn boundary(&self) -> BoundaryData {
        match self {
            ModelSpec::Scalar { boundary } => BoundaryData::Scalar(*boundary),
            ModelSpec::Euler { boundary, .. } => BoundaryData::Euler(*boundary),
        }
    }

    pub fn geometry(&self) -> Option<&NozzleGeometry> {
        match self {
            ModelSpec::Scalar { .. } => None,
            ModelSpec::Euler { geometry, .. } => Some(geometry),
        }
    }

    pub fn euler_params(&self) -> Option<&EulerParams> {
        match self {
            ModelSpec::Scalar { .. } => None,
            ModelSpec::Euler { params, .. } => Some(params),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Scalar { boundary } => {
                if !(boundary.left_value.is_finite() && boundary.right_value.is_finite()) {
                    return Err(Error::InvalidInput("scalar boundary values must be finite".into()));
                }
                Ok(())
            }
            ModelSpec::Euler { params, geometry, boundary } => {
                params.validate()?;
                geometry.validate()?;
                if !(boundary.p0 > 0.0 && boundary.h0 > 0.0) {
                    return Err(Error::InvalidInput("Euler boundary data needs p0 > 0 and h0 > 0".into()));
                }
                Ok(())
            }
        }
    }

    fn check_dim(&self, w: &State) -> Result<()> {
        if w.dim() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "state has {} components, model {} expects {}",
                w.dim(),
                self.name(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Full admissibility: finite components and, for Euler, ρ and p above the tolerance.
    pub fn check_admissible(&self, w: &State) -> Result<()> {
        self.check_dim(w)?;
        if !w.is_finite() {
            return Err(Error::Domain { component: "nonfinite", value: w.norm_inf() });
        }
        if let ModelSpec::Euler { params, .. } = self {
            euler::euler_positive_pressure(w, params)?;
        }
        Ok(())
    }

    pub fn flux(&self, w: &State) -> Result<State> {
        self.check_dim(w)?;
        match self {
            ModelSpec::Scalar { .. } => Ok(State::scalar(scalar::flux(w[0]))),
            ModelSpec::Euler { params, .. } => euler::euler_flux(w, params),
        }
    }

    pub fn flux_jacobian(&self, w: &State) -> Result<Matrix> {
        self.check_dim(w)?;
        match self {
            ModelSpec::Scalar { .. } => Ok(Matrix::from_rows(&[&[scalar::flux_derivative(w[0])]])),
            ModelSpec::Euler { params, .. } => euler::euler_flux_jacobian(w, params),
        }
    }

    pub fn source(&self, x: f64, w: &State) -> Result<State> {
        self.check_dim(w)?;
        match self {
            ModelSpec::Scalar { .. } => Ok(State::scalar(scalar::source(x, w[0]))),
            ModelSpec::Euler { params, geometry, .. } => euler::euler_source(x, w, geometry, params),
        }
    }

    pub fn source_jacobian(&self, x: f64, w: &State) -> Result<Matrix> {
        self.check_dim(w)?;
        match self {
            ModelSpec::Scalar { .. } => Ok(Matrix::identity(1)),
            ModelSpec::Euler { params, geometry, .. } => euler::euler_source_jacobian(x, w, geometry, params),
        }
    }

    /// Partial derivative `∂S/∂x` at fixed `w`; zero for autonomous sources.
    pub fn source_x_derivative(&self, x: f64, w: &State) -> Result<State> {
        self.check_dim(w)?;
        match self {
            ModelSpec::Scalar { .. } => Ok(State::zeros(1)),
            ModelSpec::Euler { params, geometry, .. } => euler::euler_source_x_derivative(x, w, geometry, params),
        }
    }

    /// Target integrand `p(w)`: `w³/3` for the scalar model, pressure for Euler.
    pub fn target(&self, w: &State) -> Result<f64> {
        self.check_dim(w)?;
        match self {
            ModelSpec::Scalar { .. } => Ok(scalar::target(w[0])),
            ModelSpec::Euler { params, .. } => euler::euler_pressure(w, params),
        }
    }

    pub fn target_gradient(&self, w: &State) -> Result<State> {
        self.check_dim(w)?;
        match self {
            ModelSpec::Scalar { .. } => Ok(State::scalar(scalar::target_derivative(w[0]))),
            ModelSpec::Euler { params, .. } => euler::euler_pressure_gradient(w, params),
        }
    }

    /// Pointwise residual `f'(w)·w_x + S(x, w)` of a smooth branch.
    pub fn smooth_residual(&self, x: f64, w: &State, wx: &State) -> Result<State> {
        Ok(self.flux_jacobian(w)?.mul_vec(wx) + self.source(x, w)?)
    }
}
