use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares line through `(ln scale, ln |value|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Pairs dropped because the value was exactly zero.
    pub excluded: usize,
}

pub fn fit_convergence_rate(pairs: &[(f64, f64)]) -> Result<RateFit> {
    if pairs.iter().any(|&(s, _)| !(s > 0.0)) {
        return Err(Error::InvalidInput("scales must be positive".into()));
    }
    let kept: Vec<(f64, f64)> = pairs.iter().filter(|p| p.1 != 0.0).map(|&(s, v)| (s.ln(), v.abs().ln())).collect();
    let excluded = pairs.len() - kept.len();
    if excluded > 0 {
        info!("fit: excluded {excluded} pair(s) with zero value");
    }
    if kept.len() < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 nonzero pairs, have {}", kept.len())));
    }
    let n = kept.len() as f64;
    let mx = kept.iter().map(|p| p.0).sum::<f64>() / n;
    let my = kept.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = kept.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = kept.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = kept.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("all scales are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = kept.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(RateFit { slope, intercept, r2, excluded })
}
