//! Regularized continuity equation `δρ − δΔρ + div(T(ρ) u) = g` with
//! homogeneous Neumann data, solved for a given velocity.
//!
//! Each Picard step freezes `a = T(ρ̃)/ρ̃` on the faces and solves the linear
//! problem `δρ − δΔρ + div(a ρ u) = g`. With the Péclet-switched face
//! weights its matrix is an M-matrix, which gives nonnegativity and the
//! comparison principle at every step.

use crate::domain::{interleaved_position, GridQ};
use crate::linalg::BandMatrix;
use crate::math::{abs, max_abs};
use crate::stagger::{omega, Field, WField};
use crate::{Error, Result};

use super::residual::face_weights;

#[derive(Debug, Clone, Copy)]
pub struct ContinuityOptions {
    pub max_iter: usize,
    /// Stop when successive iterates differ by less than this (max norm).
    pub tol: f64,
}

impl Default for ContinuityOptions {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-12 }
    }
}

#[derive(Debug, Clone)]
pub struct ContinuitySolution {
    pub rho: Field<f64>,
    pub iterations: usize,
}

struct Assembly {
    nz: usize,
    nx: usize,
}

impl Assembly {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        interleaved_position(i, self.nx) * self.nz + j
    }
}

fn ratio(rho_bar: f64, r: f64) -> f64 {
    if r > rho_bar {
        rho_bar / r
    } else {
        1.0
    }
}

/// Solves the regularized continuity equation for velocities `(u, W)`.
/// `g` is the volumetric source (e.g. `δ ρ_M`).
pub fn solve_regularized_continuity(
    grid: &GridQ,
    u: &Field<f64>,
    w: &WField<f64>,
    g: &Field<f64>,
    delta: f64,
    rho_bar: f64,
    opts: &ContinuityOptions,
) -> Result<ContinuitySolution> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(alloc::format!("delta must be positive, got {delta}")));
    }
    let (nx, nz) = (grid.nx, grid.nz);
    let mut rho = Field::filled(nx, nz, 0.0);
    for (r, gv) in rho.data.iter_mut().zip(&g.data) {
        *r = gv / delta;
    }
    let mut last = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let next = picard_step(grid, u, w, g, delta, rho_bar, &rho)?;
        let change = next.data.iter().zip(&rho.data).fold(0.0_f64, |m, (a, b)| m.max(abs(a - b)));
        rho = next;
        let scale = max_abs(&rho.data).max(1.0);
        if change <= opts.tol * scale {
            return Ok(ContinuitySolution { rho, iterations: it });
        }
        last = change;
    }
    Err(Error::PicardNonconvergence {
        iterations: opts.max_iter,
        residual: last,
    })
}

/// One frozen-coefficient linear solve.
fn picard_step(
    grid: &GridQ,
    u: &Field<f64>,
    w: &WField<f64>,
    g: &Field<f64>,
    delta: f64,
    rho_bar: f64,
    prev: &Field<f64>,
) -> Result<Field<f64>> {
    let (nx, nz) = (grid.nx, grid.nz);
    let (dy, dz) = (grid.dy(), grid.dz());
    let eps2 = grid.eps * grid.eps;
    let asm = Assembly { nx, nz };
    let n = nx * nz;
    let band = 3 * nz;
    let mut mat = BandMatrix::zeros(n, band, band);
    let mut rhs = alloc::vec![0.0; n];

    for i in 0..nx {
        let vol = grid.hc[i][0] * dy * dz;
        for j in 0..nz {
            let row = asm.idx(i, j);
            mat.add(row, row, delta * vol);
            rhs[row] = g.at(i, j) * vol;
        }
    }
    // vertical faces: flux leaves cell (i, j) into (r, j)
    for i in 0..nx {
        let r = grid.right(i);
        let hf = grid.hf[i][0];
        for j in 0..nz {
            let uu = u.at(i, j);
            let (wl, wr) = face_weights(uu, abs(uu) * dy / delta);
            let face = wl * prev.at(i, j) + wr * prev.at(r, j);
            let a = ratio(rho_bar, face);
            let cl = hf * (a * uu * wl + delta / dy) * dz;
            let cr = hf * (a * uu * wr - delta / dy) * dz;
            let (pl, pr) = (asm.idx(i, j), asm.idx(r, j));
            mat.add(pl, pl, cl);
            mat.add(pl, pr, cr);
            mat.add(pr, pl, -cl);
            mat.add(pr, pr, -cr);
        }
    }
    // interior horizontal faces: flux leaves (i, k−1) into (i, k)
    for i in 0..nx {
        let h = grid.hc[i][0];
        let diff = delta / (eps2 * h * dz);
        for k in 1..nz {
            let om = omega(grid, u, w, i, k);
            let (wb, wt) = face_weights(om, abs(om) * dz * h * eps2 / delta);
            let face = wb * prev.at(i, k - 1) + wt * prev.at(i, k);
            let a = ratio(rho_bar, face);
            let cb = (a * om * wb + diff) * dy;
            let ct = (a * om * wt - diff) * dy;
            let (pb, pt) = (asm.idx(i, k - 1), asm.idx(i, k));
            mat.add(pb, pb, cb);
            mat.add(pb, pt, ct);
            mat.add(pt, pb, -cb);
            mat.add(pt, pt, -ct);
        }
    }
    let sol = mat.lu()?.solve(&rhs);
    let mut out = Field::filled(nx, nz, 0.0);
    for i in 0..nx {
        for j in 0..nz {
            out.set(i, j, sol[asm.idx(i, j)]);
        }
    }
    Ok(out)
}

/// `Σ f · vol` over all cells.
pub fn cell_integral(grid: &GridQ, f: &Field<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..grid.nx {
        let vol = grid.cell_volume(i);
        for j in 0..grid.nz {
            s += f.at(i, j) * vol;
        }
    }
    s
}

