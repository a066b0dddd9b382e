//! Dense and banded LU factorizations with partial pivoting.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::abs;
use crate::{Error, Result};

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Factorizes in place, consuming the matrix.
    pub fn lu(mut self) -> Result<DenseLu> {
        let n = self.n;
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(abs(*v)));
        for k in 0..n {
            let mut p = k;
            let mut best = abs(self.get(k, k));
            for r in k + 1..n {
                let v = abs(self.get(r, k));
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= scale * 1e-300 || best == 0.0 {
                return Err(Error::Singular { row: k, pivot: best });
            }
            if p != k {
                for c in 0..n {
                    self.data.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let piv = self.get(k, k);
            for r in k + 1..n {
                let f = self.get(r, k) / piv;
                if f == 0.0 {
                    continue;
                }
                self.set(r, k, f);
                let (top, bottom) = self.data.split_at_mut(r * n);
                let rk = &top[k * n + k + 1..k * n + n];
                let rr = &mut bottom[k + 1..n];
                for (a, b) in rr.iter_mut().zip(rk) {
                    *a -= f * b;
                }
            }
        }
        Ok(DenseLu { m: self, perm })
    }
}

#[derive(Debug, Clone)]
pub struct DenseLu {
    m: DenseMatrix,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.m.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.m.get(i, j) * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.m.get(i, j) * x[j];
            }
            x[i] = s / self.m.get(i, i);
        }
        x
    }
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Each row keeps a contiguous window of columns `[i - kl, i + ku + kl]`; the
/// extra `kl` columns on the right absorb fill-in from row interchanges.
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
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        // column j sits at offset j + kl - i inside row i's window
        i * self.width + (j + self.kl - i)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Adds `v` at `(i, j)`; panics when the entry lies outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            self.in_band(i, j),
            "entry ({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn lu(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku, w) = (self.kl, self.ku, self.width);
        let mut piv = vec![0usize; n];
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(abs(*v)));
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = abs(self.data[self.idx(k, k)]);
            for r in k + 1..=last_row {
                let v = abs(self.data[self.idx(r, k)]);
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || best <= scale * 1e-300 {
                return Err(Error::Singular { row: k, pivot: best });
            }
            piv[k] = p;
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for c in k..=last_col {
                    let a = self.idx(k, c);
                    let b = self.idx(p, c);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            let len = last_col - k;
            let ok = self.idx(k, k + 1);
            for r in k + 1..=last_row {
                let ir = self.idx(r, k);
                let f = self.data[ir] / pivot;
                self.data[ir] = f;
                if f == 0.0 {
                    continue;
                }
                let or = ir + 1;
                let (top, bottom) = self.data.split_at_mut(r * w);
                let rk = &top[ok..ok + len];
                let rr = &mut bottom[or - r * w..or - r * w + len];
                for (a, b) in rr.iter_mut().zip(rk) {
                    *a -= f * b;
                }
            }
        }
        Ok(BandLu { m: self, piv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = &self.m;
        let n = m.n;
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                for r in k + 1..=(k + m.kl).min(n - 1) {
                    x[r] -= m.data[m.idx(r, k)] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let last = (k + m.kl + m.ku).min(n - 1);
            let mut s = x[k];
            let base = m.idx(k, k);
            for (t, c) in (k + 1..=last).enumerate() {
                s -= m.data[base + 1 + t] * x[c];
            }
            x[k] = s / m.data[base];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    }

    #[test]
    fn dense_solve_random() {
        let mut s = 7;
        let n = 9;
        let mut a = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                a.set(i, j, lcg(&mut s));
            }
        }
        let x: Vec<f64> = (0..n).map(|_| lcg(&mut s)).collect();
        let b = a.mul_vec(&x);
        let y = a.clone().lu().unwrap().solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn band_matches_dense_with_pivoting() {
        let mut s = 11;
        let (n, kl, ku) = (40, 3, 5);
        let mut band = BandMatrix::zeros(n, kl, ku);
        let mut dense = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                // weak diagonal forces row interchanges
                let v = lcg(&mut s) + if i == j { 0.01 } else { 0.0 };
                band.add(i, j, v);
                dense.set(i, j, v);
            }
        }
        let x: Vec<f64> = (0..n).map(|_| lcg(&mut s)).collect();
        let b = dense.mul_vec(&x);
        assert_eq!(band.mul_vec(&x), b);
        let y = band.lu().unwrap().solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-8, "{u} vs {v}");
        }
    }

    #[test]
    fn singular_reported() {
        let a = DenseMatrix::zeros(3);
        assert!(matches!(a.lu(), Err(Error::Singular { .. })));
    }
}
