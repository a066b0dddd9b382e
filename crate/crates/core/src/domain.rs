//! Periodic gap profiles and the grids built on them.
//!
//! The film domain `Q = {(y, Z): y ∈ [0,1), 0 < Z < h(y)}` is mapped to the
//! unit square by `ζ = Z / h(y)`. With `m = ζ h'/h`, physical derivatives
//! become `∂_y|_Z = ∂_y|_ζ − m ∂_ζ` and `∂_Z = ∂_ζ / h`.

use alloc::vec::Vec;

use crate::math::{abs, cos, sin, PI};
use crate::quad::Adaptive;
use crate::{Error, Result};

/// `h(y) = mean + Σ_k a_k cos(2π k y)` on the unit torus.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    pub mean: f64,
    /// `a_1, a_2, …`; empty for a constant gap.
    pub cos_amplitudes: Vec<f64>,
    h_min: f64,
    h_max: f64,
}

impl GapProfile {
    pub fn constant(h0: f64) -> Result<Self> {
        Self::cosine(h0, Vec::new())
    }

    pub fn cosine(mean: f64, cos_amplitudes: Vec<f64>) -> Result<Self> {
        if !mean.is_finite() || cos_amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput("gap coefficients must be finite".into()));
        }
        let mut g = Self {
            mean,
            cos_amplitudes,
            h_min: 0.0,
            h_max: 0.0,
        };
        let (lo, hi) = g.extrema();
        if !(lo > 0.0) {
            return Err(Error::InvalidInput(alloc::format!(
                "gap must stay positive, minimum is {lo}"
            )));
        }
        g.h_min = lo;
        g.h_max = hi;
        Ok(g)
    }

    /// Dense sampling followed by golden-section refinement.
    fn extrema(&self) -> (f64, f64) {
        const N: usize = 10_000;
        let dy = 1.0 / N as f64;
        let (mut imin, mut imax) = (0, 0);
        let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..N {
            let v = self.h(i as f64 * dy);
            if v < vmin {
                vmin = v;
                imin = i;
            }
            if v > vmax {
                vmax = v;
                imax = i;
            }
        }
        let lo = self.refine(imin as f64 * dy, dy, 1.0).min(vmin);
        let hi = -self.refine(imax as f64 * dy, dy, -1.0).min(-vmax);
        (lo, hi)
    }

    fn refine(&self, center: f64, dy: f64, sign: f64) -> f64 {
        let g = 0.5 * (crate::math::sqrt(5.0) - 1.0);
        let (mut a, mut b) = (center - dy, center + dy);
        for _ in 0..60 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if sign * self.h(c) < sign * self.h(d) {
                b = d;
            } else {
                a = c;
            }
        }
        sign * self.h(0.5 * (a + b))
    }

    pub fn is_constant(&self) -> bool {
        self.cos_amplitudes.iter().all(|a| *a == 0.0)
    }

    pub fn h(&self, y: f64) -> f64 {
        let mut v = self.mean;
        for (k, a) in self.cos_amplitudes.iter().enumerate() {
            v += a * cos(2.0 * PI * (k + 1) as f64 * y);
        }
        v
    }

    pub fn dh(&self, y: f64) -> f64 {
        let mut v = 0.0;
        for (k, a) in self.cos_amplitudes.iter().enumerate() {
            let w = 2.0 * PI * (k + 1) as f64;
            v -= a * w * sin(w * y);
        }
        v
    }

    pub fn d2h(&self, y: f64) -> f64 {
        let mut v = 0.0;
        for (k, a) in self.cos_amplitudes.iter().enumerate() {
            let w = 2.0 * PI * (k + 1) as f64;
            v -= a * w * w * cos(w * y);
        }
        v
    }

    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// `∫_0^1 h dy` (the cosine modes integrate to zero).
    pub fn area(&self) -> f64 {
        self.mean
    }

    /// `∫_0^1 h^k dy` by adaptive quadrature.
    pub fn power_integral(&self, k: i32) -> Result<f64> {
        if self.is_constant() {
            return Ok(crate::math::powi(self.mean, k));
        }
        let q = Adaptive {
            abs_tol: 1e-14,
            rel_tol: 1e-14,
            max_intervals: 2000,
        };
        Ok(q.integrate(|y| crate::math::powi(self.h(y), k), 0.0, 1.0, &[0.25, 0.5, 0.75])?.value)
    }
}

/// Uniform cell-centered grid on the unit torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid1D {
    pub n: usize,
}

impl Grid1D {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("grid needs at least one cell".into()));
        }
        Ok(Self { n })
    }

    pub fn dy(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dy()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.center(i)).collect()
    }

    /// Periodic index `i + k`.
    pub fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.n as isize) as usize
    }

    /// Cyclic shift by `k` cells: `out[i] = data[i - k]`.
    pub fn shift(&self, data: &[f64], k: isize) -> Vec<f64> {
        (0..self.n)
            .map(|i| data[self.wrap(i as isize - k)])
            .collect()
    }

    /// Midpoint rule for `∫_0^1 f dy`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        (0..self.n).map(|i| f(self.center(i))).sum::<f64>() * self.dy()
    }

    /// Periodic four-point Lagrange interpolation of cell data at `y`.
    pub fn interpolate(&self, data: &[f64], y: f64) -> f64 {
        let t = y * self.n as f64 - 0.5;
        let base = crate::math::floor(t);
        let x = t - base;
        let b = base as isize;
        let v = |k: isize| data[self.wrap(b + k)];
        let (xm1, x0, x1, x2) = (x + 1.0, x, x - 1.0, x - 2.0);
        v(-1) * (x0 * x1 * x2) / -6.0
            + v(0) * (xm1 * x1 * x2) / 2.0
            + v(1) * (xm1 * x0 * x2) / -2.0
            + v(2) * (xm1 * x0 * x1) / 6.0
    }
}

/// Terrain-following grid of `Q` with `nx × nz` cells in `(y, ζ)`.
///
/// Cell `(i, j)` has center `((i+½)Δy, (j+½)Δζ)`. Vertical faces are indexed
/// by the cell on their left, so face `i` sits at `y = (i+1)Δy`; horizontal
/// faces are indexed `k = 0..=nz` at `ζ = kΔζ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridQ {
    pub nx: usize,
    pub nz: usize,
    /// Film parameter used to scale vertical derivatives in physical norms.
    pub eps: f64,
    pub gap: GapProfile,
    /// `h, h', h''` at cell centers.
    pub hc: Vec<[f64; 3]>,
    /// `h, h', h''` at vertical faces.
    pub hf: Vec<[f64; 3]>,
}

impl GridQ {
    pub fn new(gap: &GapProfile, nx: usize, nz: usize, eps: f64) -> Result<Self> {
        if nx < 4 || nz < 4 {
            return Err(Error::InvalidInput(alloc::format!(
                "grid needs nx, nz >= 4, got {nx} x {nz}"
            )));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidInput(alloc::format!("eps must be positive, got {eps}")));
        }
        let dy = 1.0 / nx as f64;
        let tri = |y: f64| [gap.h(y), gap.dh(y), gap.d2h(y)];
        Ok(Self {
            nx,
            nz,
            eps,
            gap: gap.clone(),
            hc: (0..nx).map(|i| tri((i as f64 + 0.5) * dy)).collect(),
            hf: (0..nx).map(|i| tri((i as f64 + 1.0) * dy)).collect(),
        })
    }

    pub fn dy(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn dz(&self) -> f64 {
        1.0 / self.nz as f64
    }

    pub fn yc(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dy()
    }

    pub fn yf(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.dy()
    }

    pub fn zc(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dz()
    }

    pub fn zf(&self, k: usize) -> f64 {
        k as f64 * self.dz()
    }

    #[inline]
    pub fn left(&self, i: usize) -> usize {
        (i + self.nx - 1) % self.nx
    }

    #[inline]
    pub fn right(&self, i: usize) -> usize {
        (i + 1) % self.nx
    }

    /// Physical height of the node `(y, ζ)`.
    pub fn z_of(&self, y: f64, zeta: f64) -> f64 {
        zeta * self.gap.h(y)
    }

    /// `∂ζ/∂y` at fixed `Z`, i.e. `−ζ h'/h`.
    pub fn dzeta_dy(&self, y: f64, zeta: f64) -> f64 {
        -zeta * self.gap.dh(y) / self.gap.h(y)
    }

    /// `∂ζ/∂Z = 1/h`.
    pub fn dzeta_dz(&self, y: f64) -> f64 {
        1.0 / self.gap.h(y)
    }

    /// `(m, ∂_y m)` with `m = ζh'/h`, from the triple `[h, h', h'']`.
    #[inline]
    pub fn metric(hh: [f64; 3], zeta: f64) -> (f64, f64) {
        let [h, d1, d2] = hh;
        (zeta * d1 / h, zeta * (d2 * h - d1 * d1) / (h * h))
    }

    pub fn cell_volume(&self, i: usize) -> f64 {
        self.hc[i][0] * self.dy() * self.dz()
    }

    /// Discrete `|Q| = Σ h_i Δy`.
    pub fn area(&self) -> f64 {
        self.hc.iter().map(|t| t[0]).sum::<f64>() * self.dy()
    }

    /// Largest `|h'|` over the faces, a cheap scale for metric terms.
    pub fn max_slope(&self) -> f64 {
        self.hf.iter().fold(0.0, |m, t| m.max(abs(t[1])))
    }
}

/// Ordering of per-column unknown blocks that keeps periodic neighbours
/// close: columns are visited as `0, n−1, 1, n−2, …`.
pub fn interleaved_position(col: usize, n: usize) -> usize {
    if 2 * col < n {
        2 * col
    } else {
        2 * (n - 1 - col) + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn gap_values() {
        let c = GapProfile::constant(1.0).unwrap();
        assert_eq!(c.h(0.3), 1.0);
        assert_eq!(c.dh(0.3), 0.0);
        let g = GapProfile::cosine(1.0, vec![0.5]).unwrap();
        assert!((g.h(0.0) - 1.5).abs() < 1e-15);
        assert!((g.h(0.5) - 0.5).abs() < 1e-15);
        assert!((g.h_min() - 0.5).abs() < 1e-14);
        assert!((g.h_max() - 1.5).abs() < 1e-14);
        assert!((g.h(0.0) - g.h(1.0)).abs() < 1e-15);
        assert!(GapProfile::cosine(1.0, vec![1.0]).is_err());
    }

    #[test]
    fn analytic_derivatives_match_fd() {
        let g = GapProfile::cosine(1.2, vec![0.3, -0.1, 0.05]).unwrap();
        let e = 1e-5;
        for k in 0..20 {
            let y = k as f64 / 20.0 + 0.013;
            let fd1 = (g.h(y + e) - g.h(y - e)) / (2.0 * e);
            let fd2 = (g.dh(y + e) - g.dh(y - e)) / (2.0 * e);
            assert!((fd1 - g.dh(y)).abs() < 1e-8);
            assert!((fd2 - g.d2h(y)).abs() < 1e-6);
        }
    }

    #[test]
    fn shift_roundtrip() {
        let g = Grid1D::new(7).unwrap();
        let d: Vec<f64> = (0..7).map(|i| i as f64 * 1.5).collect();
        assert_eq!(g.shift(&g.shift(&d, 3), -3), d);
        assert_eq!(g.shift(&d, 7), d);
    }

    #[test]
    fn interpolation_exact_on_cubic_like_modes() {
        let g = Grid1D::new(64).unwrap();
        let f = |y: f64| cos(2.0 * PI * y);
        let d: Vec<f64> = g.centers().into_iter().map(f).collect();
        for y in [0.0, 0.1234, 0.5, 0.99] {
            assert!((g.interpolate(&d, y) - f(y)).abs() < 1e-5);
        }
    }

    #[test]
    fn uniform_rectangle_grid() {
        let gq = GridQ::new(&GapProfile::constant(1.0).unwrap(), 4, 4, 0.1).unwrap();
        assert!(gq.hc.iter().all(|t| *t == [1.0, 0.0, 0.0]));
        assert_eq!(gq.dy(), 0.25);
        assert_eq!(gq.dz(), 0.25);
        assert!(GridQ::new(&GapProfile::constant(1.0).unwrap(), 3, 4, 0.1).is_err());
    }

    #[test]
    fn interleaving_is_a_permutation() {
        for n in [4, 5, 8, 9] {
            let mut seen = vec![false; n];
            for c in 0..n {
                let p = interleaved_position(c, n);
                assert!(!seen[p]);
                seen[p] = true;
                let q = interleaved_position((c + 1) % n, n);
                assert!((p as isize - q as isize).abs() <= 2);
            }
        }
    }
}
