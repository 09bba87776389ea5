//! Small fixed-capacity vectors and matrices for conserved-variable states.
//!
//! Every model in this crate has at most three components, so states and
//! Jacobians live on the stack and are `Copy`.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

pub const MAX_DIM: usize = 3;

/// Conserved-variable vector at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    dim: usize,
    c: [f64; MAX_DIM],
}

impl State {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "state dimension {dim} out of range");
        Self { dim, c: [0.0; MAX_DIM] }
    }

    pub fn from_slice(v: &[f64]) -> Self {
        let mut s = Self::zeros(v.len());
        s.c[..v.len()].copy_from_slice(v);
        s
    }

    pub fn scalar(v: f64) -> Self {
        Self::from_slice(&[v])
    }

    pub fn splat(dim: usize, v: f64) -> Self {
        let mut s = Self::zeros(dim);
        s.c[..dim].iter_mut().for_each(|x| *x = v);
        s
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.c[..self.dim]
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.c[..self.dim]
    }

    pub fn dot(&self, other: &State) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.as_slice().iter().zip(other.as_slice()).map(|(a, b)| a * b).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.as_slice().iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> State {
        let mut out = *self;
        out.as_mut_slice().iter_mut().for_each(|x| *x = f(*x));
        out
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|x| x.is_finite())
    }

    /// Linear interpolation `(1-t)·a + t·b`.
    pub fn lerp(a: &State, b: &State, t: f64) -> State {
        *a * (1.0 - t) + *b * t
    }
}

impl Index<usize> for State {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for State {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.as_mut_slice()[i]
    }
}

impl Add for State {
    type Output = State;
    fn add(mut self, rhs: State) -> State {
        self += rhs;
        self
    }
}

impl AddAssign for State {
    fn add_assign(&mut self, rhs: State) {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.c[i] += rhs.c[i];
        }
    }
}

impl Sub for State {
    type Output = State;
    fn sub(mut self, rhs: State) -> State {
        self -= rhs;
        self
    }
}

impl SubAssign for State {
    fn sub_assign(&mut self, rhs: State) {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.c[i] -= rhs.c[i];
        }
    }
}

impl Mul<f64> for State {
    type Output = State;
    fn mul(self, s: f64) -> State {
        self.map(|x| x * s)
    }
}

impl Neg for State {
    type Output = State;
    fn neg(self) -> State {
        self.map(|x| -x)
    }
}

/// Dense `d×d` matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    dim: usize,
    m: [[f64; MAX_DIM]; MAX_DIM],
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim));
        Self { dim, m: [[0.0; MAX_DIM]; MAX_DIM] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            out.m[i][i] = 1.0;
        }
        out
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let mut out = Self::zeros(rows.len());
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), rows.len());
            out.m[i][..r.len()].copy_from_slice(r);
        }
        out
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.m[i][j] = v;
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.m[j][i] = self.m[i][j];
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &State) -> State {
        debug_assert_eq!(self.dim, v.dim());
        let mut out = State::zeros(self.dim);
        for i in 0..self.dim {
            out[i] = (0..self.dim).map(|j| self.m[i][j] * v[j]).sum();
        }
        out
    }

    pub fn scale(&self, s: f64) -> Matrix {
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.m[i][j] *= s;
            }
        }
        out
    }

    pub fn row(&self, i: usize) -> State {
        State::from_slice(&self.m[i][..self.dim])
    }

    pub fn set_row(&mut self, i: usize, r: &State) {
        self.m[i][..self.dim].copy_from_slice(r.as_slice());
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.m[i][j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Solves `self · x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &State) -> Option<State> {
        let n = self.dim;
        let mut a = self.m;
        let mut x = *b;
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
            if a[p][k].abs() < 1e-300 {
                return None;
            }
            a.swap(k, p);
            x.as_mut_slice().swap(k, p);
            for i in k + 1..n {
                let l = a[i][k] / a[k][k];
                let (top, bottom) = a.split_at_mut(i);
                for (t, s) in bottom[0][k..n].iter_mut().zip(&top[k][k..n]) {
                    *t -= l * s;
                }
                x[i] -= l * x[k];
            }
        }
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
            x[k] = (x[k] - s) / a[k][k];
        }
        Some(x)
    }
}

impl Add for Matrix {
    type Output = Matrix;
    fn add(mut self, rhs: Matrix) -> Matrix {
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.m[i][j] += rhs.m[i][j];
            }
        }
        self
    }
}

impl Sub for Matrix {
    type Output = Matrix;
    fn sub(self, rhs: Matrix) -> Matrix {
        self + rhs.scale(-1.0)
    }
}
