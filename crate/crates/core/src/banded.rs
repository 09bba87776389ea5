//! Banded LU factorization with partial pivoting.
//!
//! Storage keeps `kl` extra superdiagonals per row for pivoting fill-in, so a
//! row `i` holds columns `i - kl ..= i + ku + kl`.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.kl < i || j > i + self.ku + self.kl || i >= self.n || j >= self.n {
            None
        } else {
            Some(i * self.width + (j + self.kl - i))
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Adds `v` to entry `(i, j)`. Panics if the entry lies outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i},{j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let s = self.slot(i, j).expect("in band");
        self.data[s] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("in band");
        self.data[s] = v;
    }

    pub fn clear_row(&mut self, i: usize) {
        let w = self.width;
        self.data[i * w..(i + 1) * w].iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Transpose; the band widths swap.
    pub fn transpose(&self) -> BandMatrix {
        let mut out = BandMatrix::zeros(self.n, self.ku, self.kl);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                let v = self.get(i, j);
                if v != 0.0 {
                    out.set(j, i, v);
                }
            }
        }
        out
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.data[i * self.width..(i + 1) * self.width].iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Factorizes in place, consuming the matrix.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let scale = self.norm_inf().max(f64::MIN_POSITIVE);
        let mut piv = vec![0usize; n];
        let reach = self.ku + self.kl;
        let (mut pmin, mut pmax) = (f64::INFINITY, 0.0f64);
        for k in 0..n {
            let last = (k + self.kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pmin = pmin.min(best);
            pmax = pmax.max(best);
            if !(best > 1e-15 * scale) {
                return Err(Error::Singular { row: k, pivot: best, ratio: pmin / pmax.max(f64::MIN_POSITIVE) });
            }
            piv[k] = p;
            let jend = (k + reach).min(n - 1);
            if p != k {
                for j in k..=jend {
                    let a = self.slot(k, j).unwrap();
                    let b = self.slot(p, j).unwrap();
                    self.data.swap(a, b);
                }
            }
            let d = self.get(k, k);
            for i in k + 1..=last {
                let si = self.slot(i, k).unwrap();
                let l = self.data[si] / d;
                if l == 0.0 {
                    continue;
                }
                self.data[si] = l;
                for j in k + 1..=jend {
                    let u = self.data[self.slot(k, j).unwrap()];
                    if u != 0.0 {
                        let s = self.slot(i, j).unwrap();
                        self.data[s] -= l * u;
                    }
                }
            }
        }
        Ok(BandLu { m: self, piv, pivot_ratio: pmin / pmax })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
    /// Smallest over largest pivot magnitude; a cheap conditioning diagnostic.
    pub pivot_ratio: f64,
}

impl BandLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = &self.m;
        let n = m.n;
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let last = (k + m.kl).min(n - 1);
            let xk = x[k];
            for i in k + 1..=last {
                x[i] -= m.get(i, k) * xk;
            }
        }
        let reach = m.ku + m.kl;
        for k in (0..n).rev() {
            let jend = (k + reach).min(n - 1);
            let s: f64 = (k + 1..=jend).map(|j| m.get(k, j) * x[j]).sum();
            x[k] = (x[k] - s) / m.get(k, k);
        }
        x
    }
}
