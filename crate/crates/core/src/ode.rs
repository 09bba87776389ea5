//! Dormand–Prince 5(4) integrator for scalar ODEs with cubic Hermite dense output.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, max_step: 1e-3, max_steps: 1_000_000 }
    }
}

/// Accepted steps of an integration, sorted by increasing `x`.
#[derive(Debug, Clone)]
pub struct DenseTrajectory {
    xs: Vec<f64>,
    ys: Vec<f64>,
    dys: Vec<f64>,
}

impl DenseTrajectory {
    pub fn x_range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    /// Merges two trajectories that meet at a common point.
    pub fn join(a: DenseTrajectory, b: DenseTrajectory) -> DenseTrajectory {
        let mut pts: Vec<(f64, f64, f64)> = a
            .xs
            .into_iter()
            .zip(a.ys)
            .zip(a.dys)
            .chain(b.xs.into_iter().zip(b.ys).zip(b.dys))
            .map(|((x, y), d)| (x, y, d))
            .collect();
        pts.sort_by(|p, q| p.0.total_cmp(&q.0));
        pts.dedup_by(|p, q| p.0 == q.0);
        DenseTrajectory {
            xs: pts.iter().map(|p| p.0).collect(),
            ys: pts.iter().map(|p| p.1).collect(),
            dys: pts.iter().map(|p| p.2).collect(),
        }
    }

    /// Evaluates the cubic Hermite interpolant; `x` is clamped to the covered range.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_derivative(x).0
    }

    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let n = self.xs.len();
        if n == 1 {
            return (self.ys[0], self.dys[0]);
        }
        let x = x.clamp(self.xs[0], self.xs[n - 1]);
        let k = match self.xs.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (y0, y1, d0, d1) = (self.ys[k], self.ys[k + 1], self.dys[k] * h, self.dys[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let y = (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * d1;
        let dy = ((6.0 * t2 - 6.0 * t) * y0 + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (-6.0 * t2 + 6.0 * t) * y1 + (3.0 * t2 - 2.0 * t) * d1) / h;
        (y, dy)
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(x, y)` from `(x0, y0)` to `x1` (either direction).
pub fn dopri5(
    mut f: impl FnMut(f64, f64) -> f64,
    x0: f64,
    y0: f64,
    x1: f64,
    opts: OdeOptions,
) -> Result<DenseTrajectory> {
    let dir = if x1 >= x0 { 1.0 } else { -1.0 };
    let span = (x1 - x0).abs();
    let mut xs = vec![x0];
    let mut ys = vec![y0];
    let mut k1 = f(x0, y0);
    let mut dys = vec![k1];
    if span == 0.0 {
        return Ok(DenseTrajectory { xs, ys, dys });
    }
    let (mut x, mut y) = (x0, y0);
    let mut h = opts.max_step.min(span).min(1e-4);
    let mut steps = 0;
    while (x1 - x) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Divergence(format!("ODE step limit reached at x = {x}")));
        }
        h = h.min((x1 - x).abs());
        let mut k = [0.0; 7];
        k[0] = k1;
        for s in 1..7 {
            let yi = y + dir * h * (0..s).map(|j| A[s][j] * k[j]).sum::<f64>();
            k[s] = f(x + dir * C[s] * h, yi);
        }
        let ynew = y + dir * h * (0..6).map(|j| A[6][j] * k[j]).sum::<f64>();
        let err = (h * (0..7).map(|j| E[j] * k[j]).sum::<f64>()).abs();
        let sc = opts.atol + opts.rtol * y.abs().max(ynew.abs());
        let ratio = err / sc;
        if !ynew.is_finite() {
            return Err(Error::Divergence(format!("ODE solution blew up near x = {x}")));
        }
        if ratio <= 1.0 {
            x = if (x1 - x).abs() <= h { x1 } else { x + dir * h };
            y = ynew;
            k1 = k[6];
            xs.push(x);
            ys.push(y);
            dys.push(k1);
        }
        let fac = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * fac).min(opts.max_step);
        if h < 1e-14 * span.max(1.0) {
            return Err(Error::Divergence(format!("ODE step size underflow near x = {x}")));
        }
    }
    if dir < 0.0 {
        xs.reverse();
        ys.reverse();
        dys.reverse();
    }
    Ok(DenseTrajectory { xs, ys, dys })
}
