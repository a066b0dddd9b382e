//! Staggered unknown layout on [`GridQ`] and the stencils shared by the
//! thin-film and divergence solvers.
//!
//! Per grid column `i` the unknowns are the cell scalars `(i, j)`, the
//! horizontal velocity on the right vertical face `(i, j)` and the vertical
//! velocity on the interior horizontal faces `(i, k)`, `k = 1..nz`. Wall
//! values of the vertical velocity are zero and not stored.

use alloc::vec::Vec;

use crate::domain::{interleaved_position, GridQ};
use crate::dual::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub nx: usize,
    pub nz: usize,
}

/// Kind of unknown inside a column block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Cell(usize),
    FaceU(usize),
    FaceW(usize),
}

impl Layout {
    pub fn new(grid: &GridQ) -> Self {
        Self { nx: grid.nx, nz: grid.nz }
    }

    /// Unknowns per column.
    pub fn block(&self) -> usize {
        3 * self.nz - 1
    }

    pub fn len(&self) -> usize {
        self.nx * self.block()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    fn base(&self, i: usize) -> usize {
        interleaved_position(i, self.nx) * self.block()
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        self.base(i) + j
    }

    #[inline]
    pub fn face_u(&self, i: usize, j: usize) -> usize {
        self.base(i) + self.nz + j
    }

    /// Interior horizontal face, `1 ≤ k < nz`.
    #[inline]
    pub fn face_w(&self, i: usize, k: usize) -> usize {
        self.base(i) + 2 * self.nz + k - 1
    }

    /// Column and slot of a global index.
    pub fn locate(&self, idx: usize) -> (usize, Slot) {
        let pos = idx / self.block();
        let local = idx % self.block();
        let col = if pos % 2 == 0 { pos / 2 } else { self.nx - 1 - pos / 2 };
        let slot = if local < self.nz {
            Slot::Cell(local)
        } else if local < 2 * self.nz {
            Slot::FaceU(local - self.nz)
        } else {
            Slot::FaceW(local - 2 * self.nz + 1)
        };
        (col, slot)
    }

    pub fn level(slot: Slot) -> usize {
        match slot {
            Slot::Cell(j) | Slot::FaceU(j) | Slot::FaceW(j) => j,
        }
    }
}

/// Column-major `nx × nz` cell or face-u array.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<S> {
    pub nx: usize,
    pub nz: usize,
    pub data: Vec<S>,
}

impl<S: Copy> Field<S> {
    pub fn filled(nx: usize, nz: usize, v: S) -> Self {
        Self { nx, nz, data: alloc::vec![v; nx * nz] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> S {
        self.data[i * self.nz + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.nz + j] = v;
    }
}

/// `nx × (nz+1)` array of vertical velocities including the zero walls.
#[derive(Debug, Clone, PartialEq)]
pub struct WField<S> {
    pub nx: usize,
    pub nz: usize,
    pub data: Vec<S>,
}

impl<S: Copy> WField<S> {
    pub fn filled(nx: usize, nz: usize, v: S) -> Self {
        Self { nx, nz, data: alloc::vec![v; nx * (nz + 1)] }
    }

    #[inline]
    pub fn at(&self, i: usize, k: usize) -> S {
        self.data[i * (self.nz + 1) + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, k: usize, v: S) {
        self.data[i * (self.nz + 1) + k] = v;
    }
}

/// Unpacks a global vector into cell, face-u and face-w arrays.
pub fn unpack<S: Scalar>(lay: &Layout, x: &[S]) -> (Field<S>, Field<S>, WField<S>) {
    let (nx, nz) = (lay.nx, lay.nz);
    let mut c = Field::filled(nx, nz, S::cst(0.0));
    let mut u = Field::filled(nx, nz, S::cst(0.0));
    let mut w = WField::filled(nx, nz, S::cst(0.0));
    for i in 0..nx {
        for j in 0..nz {
            c.set(i, j, x[lay.cell(i, j)]);
            u.set(i, j, x[lay.face_u(i, j)]);
        }
        for k in 1..nz {
            w.set(i, k, x[lay.face_w(i, k)]);
        }
    }
    (c, u, w)
}

pub fn pack(lay: &Layout, c: &Field<f64>, u: &Field<f64>, w: &WField<f64>) -> Vec<f64> {
    let mut x = alloc::vec![0.0; lay.len()];
    for i in 0..lay.nx {
        for j in 0..lay.nz {
            x[lay.cell(i, j)] = c.at(i, j);
            x[lay.face_u(i, j)] = u.at(i, j);
        }
        for k in 1..lay.nz {
            x[lay.face_w(i, k)] = w.at(i, k);
        }
    }
    x
}

/// First and second derivative through three points at offsets `−a, 0, b`.
#[inline]
pub fn three_point<S: Scalar>(fm: S, f0: S, fp: S, a: f64, b: f64) -> (S, S) {
    let d1 = fm * (-b / (a * (a + b))) + f0 * ((b - a) / (a * b)) + fp * (a / (b * (a + b)));
    let d2 = (fm * (1.0 / (a * (a + b))) - f0 * (1.0 / (a * b)) + fp * (1.0 / (b * (a + b)))) * 2.0;
    (d1, d2)
}

/// `ζ`-derivatives of a cell-row quantity stored at levels `j` whose wall
/// values sit half a cell outside the first and last level.
#[inline]
pub fn level_derivs<S: Scalar, F: Fn(usize) -> S>(f: F, j: usize, nz: usize, bottom: S, top: S, dz: f64) -> (S, S) {
    let (fm, a) = if j == 0 { (bottom, 0.5 * dz) } else { (f(j - 1), dz) };
    let (fp, b) = if j + 1 == nz { (top, 0.5 * dz) } else { (f(j + 1), dz) };
    three_point(fm, f(j), fp, a, b)
}

/// `∂_ζ` of a cell quantity at cell centers without wall data: central in
/// the interior, one-sided next to the walls.
#[inline]
pub fn cell_dzeta<S: Scalar>(c: &Field<S>, i: usize, j: usize, dz: f64) -> S {
    let nz = c.nz;
    if j == 0 {
        (c.at(i, 1) - c.at(i, 0)) / dz
    } else if j + 1 == nz {
        (c.at(i, nz - 1) - c.at(i, nz - 2)) / dz
    } else {
        (c.at(i, j + 1) - c.at(i, j - 1)) / (2.0 * dz)
    }
}

/// Wall value of a cell quantity by linear extrapolation.
#[inline]
pub fn wall_extrapolate<S: Scalar>(c: &Field<S>, i: usize, top: bool) -> S {
    let nz = c.nz;
    if top {
        c.at(i, nz - 1) * 1.5 - c.at(i, nz - 2) * 0.5
    } else {
        c.at(i, 0) * 1.5 - c.at(i, 1) * 0.5
    }
}

/// Average of the four horizontal velocities around the interior
/// horizontal face `(i, k)`.
#[inline]
pub fn u_at_wface<S: Scalar>(grid: &GridQ, u: &Field<S>, i: usize, k: usize) -> S {
    let l = grid.left(i);
    (u.at(l, k - 1) + u.at(l, k) + u.at(i, k - 1) + u.at(i, k)) * 0.25
}

/// Transport velocity through the interior horizontal face `(i, k)` in
/// `ζ` units: `ω = W − ζ h' ū`.
#[inline]
pub fn omega<S: Scalar>(grid: &GridQ, u: &Field<S>, w: &WField<S>, i: usize, k: usize) -> S {
    w.at(i, k) - u_at_wface(grid, u, i, k) * (grid.zf(k) * grid.hc[i][1])
}

/// Finite-volume divergence of `(u, W)` at every cell.
pub fn divergence<S: Scalar>(grid: &GridQ, u: &Field<S>, w: &WField<S>) -> Field<S> {
    let (nx, nz) = (grid.nx, grid.nz);
    let (dy, dz) = (grid.dy(), grid.dz());
    let mut d = Field::filled(nx, nz, S::cst(0.0));
    for i in 0..nx {
        let l = grid.left(i);
        let vol = grid.hc[i][0] * dy * dz;
        for j in 0..nz {
            let east = u.at(i, j) * grid.hf[i][0];
            let west = u.at(l, j) * grid.hf[l][0];
            let top = if j + 1 < nz { omega(grid, u, w, i, j + 1) } else { S::cst(0.0) };
            let bot = if j > 0 { omega(grid, u, w, i, j) } else { S::cst(0.0) };
            d.set(i, j, ((east - west) * dz + (top - bot) * dy) / vol);
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::GapProfile;

    #[test]
    fn layout_roundtrip() {
        let g = GridQ::new(&GapProfile::constant(1.0).unwrap(), 6, 4, 0.1).unwrap();
        let lay = Layout::new(&g);
        let mut seen = alloc::vec![false; lay.len()];
        for i in 0..6 {
            for j in 0..4 {
                for (idx, slot) in [(lay.cell(i, j), Slot::Cell(j)), (lay.face_u(i, j), Slot::FaceU(j))] {
                    assert!(!seen[idx]);
                    seen[idx] = true;
                    assert_eq!(lay.locate(idx), (i, slot));
                }
            }
            for k in 1..4 {
                let idx = lay.face_w(i, k);
                assert!(!seen[idx]);
                seen[idx] = true;
                assert_eq!(lay.locate(idx), (i, Slot::FaceW(k)));
            }
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn three_point_exact_on_quadratics() {
        let f = |x: f64| 2.0 + 3.0 * x - 1.5 * x * x;
        let (a, b) = (0.05, 0.1);
        let (d1, d2) = three_point(f(-a), f(0.0), f(b), a, b);
        assert!((d1 - 3.0).abs() < 1e-12);
        assert!((d2 + 3.0).abs() < 1e-10);
    }
}
