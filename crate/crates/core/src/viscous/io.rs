//! CSV export and the little-endian binary checkpoint.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::state::State;

use super::{FieldSolution, Grid};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"SAJ1";

/// Rows `x, w0.., epsilon` at 17 significant digits.
pub fn write_field_csv<W: Write>(mut out: W, grid: &Grid, values: &[State], epsilon: f64, prefix: &str) -> Result<()> {
    let d = values[0].dim();
    let mut s = String::from("x");
    for k in 0..d {
        s.push_str(&format!(",{prefix}{k}"));
    }
    s.push_str(",epsilon\n");
    for (i, v) in values.iter().enumerate() {
        s.push_str(&format!("{:.16e}", grid.x(i)));
        for k in 0..d {
            s.push_str(&format!(",{:.16e}", v[k]));
        }
        s.push_str(&format!(",{epsilon:.16e}\n"));
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

/// Magic, `u32` node count, `u32` dimension, `f64` ε, nodes, then values row-major.
pub fn write_checkpoint<W: Write>(mut out: W, sol: &FieldSolution) -> Result<()> {
    let n = u32::try_from(sol.grid.len()).map_err(|_| Error::InvalidInput("grid too large for a checkpoint".into()))?;
    let d = sol.dim() as u32;
    let mut buf = Vec::with_capacity(16 + 8 * sol.grid.len() * (1 + sol.dim()));
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&n.to_le_bytes());
    buf.extend_from_slice(&d.to_le_bytes());
    buf.extend_from_slice(&sol.epsilon.to_le_bytes());
    for x in sol.grid.nodes() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    for v in &sol.values {
        for &c in v.as_slice() {
            buf.extend_from_slice(&c.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Reads a checkpoint. Solver metadata is not stored, so the result is marked
/// unconverged; re-solve from it to restore the flags.
pub fn read_checkpoint<R: Read>(mut input: R) -> Result<FieldSolution> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let bad = |m: &str| Error::InvalidInput(format!("malformed checkpoint: {m}"));
    if bytes.len() < 20 || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(bad("missing magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let n = u32_at(4);
    let d = u32_at(8);
    if !(1..=3).contains(&d) {
        return Err(bad("dimension out of range"));
    }
    let expected = 20 + 8 * n * (1 + d);
    if bytes.len() != expected {
        return Err(bad(&format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let epsilon = f64_at(12);
    let nodes: Vec<f64> = (0..n).map(|i| f64_at(20 + 8 * i)).collect();
    let grid = Grid::from_nodes(&nodes)?;
    let base = 20 + 8 * n;
    let values = (0..n)
        .map(|i| {
            let c: Vec<f64> = (0..d).map(|k| f64_at(base + 8 * (i * d + k))).collect();
            State::from_slice(&c)
        })
        .collect();
    Ok(FieldSolution {
        grid,
        values,
        epsilon,
        converged: false,
        newton_iterations: 0,
        final_residual_norm: f64::NAN,
        under_resolved: grid.h() > epsilon / 5.0,
    })
}
