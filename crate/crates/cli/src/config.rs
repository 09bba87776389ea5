//! Experiment configuration: sectioned `key = value` TOML with unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shock_adjoint::adjoint::BcPolicy;
use shock_adjoint::models::{EulerBoundary, EulerParams, NozzleGeometry, ScalarBoundary};
use shock_adjoint::viscous::{validate_decreasing, GridPolicy};
use shock_adjoint::ModelSpec;

use crate::error::CliError;

/// `κ` below which the layer is reported as under-resolved.
pub const MIN_RESOLVED_KAPPA: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Scalar,
    EulerNozzle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: ModelName,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalarSection {
    pub left_value: f64,
    pub right_value: f64,
}

impl Default for ScalarSection {
    fn default() -> Self {
        let b = ScalarBoundary::default();
        Self { left_value: b.left_value, right_value: b.right_value }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EulerSection {
    pub gamma: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub throat: f64,
    pub throat_area: f64,
    pub curvature: f64,
    pub p0: f64,
    pub s0: f64,
    pub h0: f64,
}

impl Default for EulerSection {
    fn default() -> Self {
        let (p, g, b) = (EulerParams::default(), NozzleGeometry::default(), EulerBoundary::default());
        Self {
            gamma: p.gamma,
            alpha0: p.alpha0,
            alpha1: p.alpha1,
            throat: g.throat,
            throat_area: g.throat_area,
            curvature: g.curvature,
            p0: b.p0,
            s0: b.s0,
            h0: b.h0,
        }
    }
}

/// Either an explicit list or a geometric progression `start·factor^k`, `k < count`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub eps: Option<Vec<f64>>,
    pub eps0: Option<f64>,
    pub factor: Option<f64>,
    pub count: Option<usize>,
    pub kappa: Option<f64>,
    pub max_nodes: Option<usize>,
    pub theta: Option<f64>,
    pub bc_policy: Option<BcPolicy>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    pub nu: Option<Vec<f64>>,
    pub nu0: Option<f64>,
    pub factor: Option<f64>,
    pub count: Option<usize>,
    pub coupling: Option<f64>,
    /// Internal term the offset adjoint is built to carry.
    pub internal_offset: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub scalar: Option<ScalarSection>,
    #[serde(default)]
    pub euler: Option<EulerSection>,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub perturbation: PerturbationSection,
    #[serde(default)]
    pub run: RunSection,
}

fn progression(
    name: &str,
    list: &Option<Vec<f64>>,
    start: Option<f64>,
    factor: Option<f64>,
    count: Option<usize>,
    default: Vec<f64>,
) -> Result<Vec<f64>, CliError> {
    let out = match (list, start, factor, count) {
        (Some(l), None, None, None) => l.clone(),
        (None, Some(s), Some(f), Some(c)) => (0..c).map(|k| s * f.powi(k as i32)).collect(),
        (None, None, None, None) => default,
        _ => {
            return Err(CliError::Config(format!(
                "{name}: give either an explicit list or all of start, factor and count"
            )))
        }
    };
    validate_decreasing(&out, name).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(out)
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything that can be checked before any solve.
    pub fn validate(&self) -> Result<(), CliError> {
        self.eps_list()?;
        self.nu_list()?;
        self.grid_policy()?;
        self.theta()?;
        self.coupling()?;
        self.model()?;
        if self.model.name == ModelName::Scalar && self.bc_policy() == BcPolicy::LinearizedCharacteristic {
            return Err(CliError::Config("bc_policy linearized-characteristic needs the euler-nozzle model".into()));
        }
        if self.run.workers == Some(0) {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<ModelSpec, CliError> {
        let m = match self.model.name {
            ModelName::Scalar => {
                if self.euler.is_some() {
                    return Err(CliError::Config("[euler] section given for the scalar model".into()));
                }
                let s = self.scalar.clone().unwrap_or_default();
                ModelSpec::Scalar { boundary: ScalarBoundary { left_value: s.left_value, right_value: s.right_value } }
            }
            ModelName::EulerNozzle => {
                if self.scalar.is_some() {
                    return Err(CliError::Config("[scalar] section given for the euler-nozzle model".into()));
                }
                let e = self.euler.clone().unwrap_or_default();
                ModelSpec::Euler {
                    params: EulerParams { gamma: e.gamma, alpha0: e.alpha0, alpha1: e.alpha1 },
                    geometry: NozzleGeometry { throat: e.throat, throat_area: e.throat_area, curvature: e.curvature },
                    boundary: EulerBoundary { p0: e.p0, s0: e.s0, h0: e.h0 },
                }
            }
        };
        m.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(m)
    }

    pub fn eps_list(&self) -> Result<Vec<f64>, CliError> {
        let s = &self.sweep;
        let default = match self.model.name {
            ModelName::Scalar => (0..7).map(|k| 0.05 * 0.5f64.powi(k)).collect(),
            ModelName::EulerNozzle => (0..5).map(|k| 0.01 * 0.5f64.powi(k)).collect(),
        };
        progression("eps_list", &s.eps, s.eps0, s.factor, s.count, default)
    }

    pub fn nu_list(&self) -> Result<Vec<f64>, CliError> {
        let p = &self.perturbation;
        let default = (0..6).map(|k| 1e-2 * 0.5f64.powi(k)).collect();
        progression("nu_list", &p.nu, p.nu0, p.factor, p.count, default)
    }

    pub fn grid_policy(&self) -> Result<GridPolicy, CliError> {
        let d = GridPolicy::default();
        let policy = GridPolicy { kappa: self.sweep.kappa.unwrap_or(d.kappa), max_nodes: self.sweep.max_nodes.unwrap_or(d.max_nodes) };
        if !(policy.kappa > 0.0) || !policy.kappa.is_finite() {
            return Err(CliError::Config(format!("kappa must be positive, got {}", policy.kappa)));
        }
        if policy.max_nodes < 17 {
            return Err(CliError::Config("max_nodes must be at least 17".into()));
        }
        Ok(policy)
    }

    /// True when `κ` is below the resolution floor; the run proceeds with a warning.
    pub fn under_resolved(&self) -> bool {
        self.grid_policy().map(|p| p.kappa < MIN_RESOLVED_KAPPA).unwrap_or(false)
    }

    pub fn theta(&self) -> Result<f64, CliError> {
        let t = self.sweep.theta.unwrap_or(0.05);
        if !(t > 0.0 && t < 1.0) {
            return Err(CliError::Config(format!("theta must lie in (0, 1), got {t}")));
        }
        Ok(t)
    }

    pub fn bc_policy(&self) -> BcPolicy {
        self.sweep.bc_policy.unwrap_or(BcPolicy::DirichletZero)
    }

    pub fn coupling(&self) -> Result<f64, CliError> {
        let c = self.perturbation.coupling.unwrap_or(0.5);
        if !c.is_finite() {
            return Err(CliError::Config("coupling must be finite".into()));
        }
        Ok(c)
    }

    pub fn internal_offset(&self) -> f64 {
        self.perturbation.internal_offset.unwrap_or(0.1)
    }

    pub fn seed(&self) -> u64 {
        self.run.seed.unwrap_or(0)
    }
}
