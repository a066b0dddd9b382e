//! Discrete residual of the regularized rescaled system on the staggered
//! sigma grid.
//!
//! Rows, per column, in layout order:
//! * continuity `δ(ρ − ρ_M) − δΔρ + div(T(ρ) u) = 0` in finite-volume form
//!   with grid-aligned diffusion,
//! * horizontal momentum (multiplied by `ε²`),
//! * vertical momentum for `W = V/ε` (multiplied by `ε²`).

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::GridQ;
use crate::dual::Scalar;
use crate::eos::RegularizedEos;
use crate::jacobian::Stencil;
use crate::math::abs;
use crate::stagger::{cell_dzeta, divergence, level_derivs, omega, three_point, u_at_wface, unpack, wall_extrapolate, Field, Layout};

pub(crate) const STENCIL: Stencil = Stencil {
    col_lo: -1,
    col_hi: 2,
    level_reach: 3,
};

/// Coefficients entering the residual.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Physics {
    pub eps: f64,
    pub mu: f64,
    pub lambda_visc: f64,
    pub s: f64,
    pub reg: RegularizedEos,
}

/// Face weights `(upstream-left/bottom, right/top)`: centred while the cell
/// Péclet number is at most 2, upwind beyond.
#[inline]
pub(crate) fn face_weights(vel: f64, peclet: f64) -> (f64, f64) {
    if peclet <= 2.0 {
        (0.5, 0.5)
    } else if vel > 0.0 {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    }
}

#[inline]
fn cut<S: Scalar>(rho_bar: f64, r: S) -> S {
    let v = r.re();
    if v <= 0.0 {
        r.chain(0.0, 0.0)
    } else if v >= rho_bar {
        r.chain(rho_bar, 0.0)
    } else {
        r
    }
}

#[inline]
fn lap<S: Scalar>(eps2: f64, h: f64, hp: f64, m: f64, my: f64, f_yy: S, f_yz: S, f_z: S, f_zz: S) -> S {
    (f_yy - f_yz * (2.0 * m) + f_zz * (m * m) + f_z * (m * hp / h - my)) * eps2 + f_zz / (h * h)
}

/// Evaluates the residual. With `frozen_rho`, continuity rows become
/// `ρ − ρ_frozen` so the velocity block can be solved on its own.
pub(crate) fn residual<S: Scalar>(grid: &GridQ, lay: &Layout, ph: &Physics, frozen_rho: Option<&Field<f64>>, x: &[S]) -> Vec<S> {
    let (nx, nz) = (grid.nx, grid.nz);
    let (dy, dz) = (grid.dy(), grid.dz());
    let eps2 = ph.eps * ph.eps;
    let delta = ph.reg.delta;
    let rb = ph.reg.law.rho_bar;
    let zero = S::cst(0.0);
    let (rho, u, w) = unpack(lay, x);
    let mut out = vec![zero; lay.len()];

    let mut pres = Field::filled(nx, nz, zero);
    for (pv, r) in pres.data.iter_mut().zip(&rho.data) {
        let (p, dp) = ph.reg.solver_pressure(r.re());
        *pv = r.chain(p, dp);
    }
    let div = divergence(grid, &u, &w);

    match frozen_rho {
        Some(fr) => {
            for i in 0..nx {
                for j in 0..nz {
                    out[lay.cell(i, j)] = rho.at(i, j) - fr.at(i, j);
                }
            }
        }
        None => {
            let mut fy = Field::filled(nx, nz, zero);
            for i in 0..nx {
                let r = grid.right(i);
                for j in 0..nz {
                    let (rl, rr, uu) = (rho.at(i, j), rho.at(r, j), u.at(i, j));
                    let (wl, wr) = face_weights(uu.re(), abs(uu.re()) * dy / delta);
                    let face = rl * wl + rr * wr;
                    fy.set(i, j, (cut(rb, face) * uu - (rr - rl) * (delta / dy)) * grid.hf[i][0]);
                }
            }
            for i in 0..nx {
                let l = grid.left(i);
                let h = grid.hc[i][0];
                let vol = h * dy * dz;
                let diff = delta / (eps2 * h * dz);
                let mut below = zero;
                for j in 0..nz {
                    let above = if j + 1 < nz {
                        let k = j + 1;
                        let om = omega(grid, &u, &w, i, k);
                        let pe = abs(om.re()) * dz * h * eps2 / delta;
                        let (wb, wt) = face_weights(om.re(), pe);
                        let face = rho.at(i, k - 1) * wb + rho.at(i, k) * wt;
                        cut(rb, face) * om - (rho.at(i, k) - rho.at(i, k - 1)) * diff
                    } else {
                        zero
                    };
                    let flux = ((fy.at(i, j) - fy.at(l, j)) * dz + (above - below) * dy) / vol;
                    out[lay.cell(i, j)] = (rho.at(i, j) - ph.reg.rho_m) * delta + flux;
                    below = above;
                }
            }
        }
    }

    // density averaged onto faces and its wall extrapolation
    let mut rho_u = Field::filled(nx, nz, zero);
    let mut rho_wall = vec![zero; nx];
    for i in 0..nx {
        let r = grid.right(i);
        for j in 0..nz {
            rho_u.set(i, j, (rho.at(i, j) + rho.at(r, j)) * 0.5);
        }
        rho_wall[i] = (wall_extrapolate(&rho, i, false) + wall_extrapolate(&rho, r, false)) * 0.5;
    }
    let lam_mu = ph.lambda_visc + ph.mu;
    let s = S::cst(ph.s);

    for i in 0..nx {
        let l = grid.left(i);
        let r = grid.right(i);
        let hh = grid.hf[i];
        let (h, hp) = (hh[0], hh[1]);
        for j in 0..nz {
            let (m, my) = GridQ::metric(hh, grid.zc(j));
            let ucol = |c: usize| level_derivs(|jj| u.at(c, jj), j, nz, s, zero, dz);
            let (ud1, ud2) = ucol(i);
            let u_yy = (u.at(r, j) - u.at(i, j) * 2.0 + u.at(l, j)) / (dy * dy);
            let u_y = (u.at(r, j) - u.at(l, j)) / (2.0 * dy);
            let u_yz = (ucol(r).0 - ucol(l).0) / (2.0 * dy);
            let lap_u = lap(eps2, h, hp, m, my, u_yy, u_yz, ud1, ud2);

            let dp = (pres.at(r, j) - pres.at(i, j)) / dy - (cell_dzeta(&pres, i, j, dz) + cell_dzeta(&pres, r, j, dz)) * (0.5 * m);
            let dd = (div.at(r, j) - div.at(i, j)) / dy - (cell_dzeta(&div, i, j, dz) + cell_dzeta(&div, r, j, dz)) * (0.5 * m);

            let wbar = (w.at(i, j) + w.at(i, j + 1) + w.at(r, j) + w.at(r, j + 1)) * 0.25;
            let tbar = cut(rb, rho_u.at(i, j));
            let conv = tbar * (u.at(i, j) * (u_y - ud1 * m) + wbar * ud1 / h) * eps2;

            let qcol = |c: usize| level_derivs(|jj| rho_u.at(c, jj) * u.at(c, jj), j, nz, rho_wall[c] * s, zero, dz);
            let (qd1, qd2) = qcol(i);
            let q = |c: usize| rho_u.at(c, j) * u.at(c, j);
            let q_yy = (q(r) - q(i) * 2.0 + q(l)) / (dy * dy);
            let q_yz = (qcol(r).0 - qcol(l).0) / (2.0 * dy);
            let lap_q = lap(eps2, h, hp, m, my, q_yy, q_yz, qd1, qd2);

            out[lay.face_u(i, j)] = conv + dp - lap_u * ph.mu - dd * (eps2 * lam_mu) - lap_q * delta + q(i) * (eps2 * delta);
        }
    }

    for i in 0..nx {
        let l = grid.left(i);
        let r = grid.right(i);
        let hh = grid.hc[i];
        let (h, hp) = (hh[0], hh[1]);
        for k in 1..nz {
            let (m, my) = GridQ::metric(hh, grid.zf(k));
            let wcol = |c: usize| three_point(w.at(c, k - 1), w.at(c, k), w.at(c, k + 1), dz, dz);
            let (wd1, wd2) = wcol(i);
            let w_yy = (w.at(r, k) - w.at(i, k) * 2.0 + w.at(l, k)) / (dy * dy);
            let w_y = (w.at(r, k) - w.at(l, k)) / (2.0 * dy);
            let w_yz = (wcol(r).0 - wcol(l).0) / (2.0 * dy);
            let lap_w = lap(eps2, h, hp, m, my, w_yy, w_yz, wd1, wd2);

            let dpz = (pres.at(i, k) - pres.at(i, k - 1)) / (dz * h);
            let ddz = (div.at(i, k) - div.at(i, k - 1)) / (dz * h);

            let ubar = u_at_wface(grid, &u, i, k);
            let rbar = |c: usize, kk: usize| (rho.at(c, kk - 1) + rho.at(c, kk)) * 0.5;
            let tbar = cut(rb, rbar(i, k));
            let conv = tbar * (ubar * (w_y - wd1 * m) + w.at(i, k) * wd1 / h) * eps2;

            let q = |c: usize, kk: usize| if kk == 0 || kk == nz { zero } else { rbar(c, kk) * w.at(c, kk) };
            let qcol = |c: usize| three_point(q(c, k - 1), q(c, k), q(c, k + 1), dz, dz);
            let (qd1, qd2) = qcol(i);
            let q_yy = (q(r, k) - q(i, k) * 2.0 + q(l, k)) / (dy * dy);
            let q_yz = (qcol(r).0 - qcol(l).0) / (2.0 * dy);
            let lap_q = lap(eps2, h, hp, m, my, q_yy, q_yz, qd1, qd2);

            let rw = conv + dpz / eps2 - lap_w * ph.mu - ddz * lam_mu - lap_q * delta + q(i, k) * (eps2 * delta);
            out[lay.face_w(i, k)] = rw * eps2;
        }
    }
    out
}
