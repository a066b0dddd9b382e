//! Diagnostic estimates of a thin-film state, recomputable from the stored
//! fields.

use crate::divfree::{bump, bump_slope};
use crate::math::sqrt;
use crate::quad::GaussLegendre;
use crate::stagger::{divergence, level_derivs, three_point, Field};
use crate::Result;

use super::{ThinFilmProblem, ThinFilmState};

/// Norms in the physical thin domain `Q_ε = {0 < z < εh}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateReport {
    /// `‖u − ū‖² + ε²‖∇(u − ū)‖²`.
    pub energy_lhs: f64,
    /// `ε²‖∇ū‖²`.
    pub energy_rhs: f64,
    /// `energy_lhs / energy_rhs`, zero when both vanish.
    pub energy_constant: f64,
    /// Layer width of the reference extension `ū` in rescaled `Z`.
    pub layer_width: f64,
    /// `|Q_ε|⁻¹ ∫ p(ρ) ρ`.
    pub pressure_mean: f64,
    /// `‖p(ρ)‖²_{L²(Q_ε)}`.
    pub pressure_l2: f64,
    /// `‖p − mean_Z p‖₂ / ‖p‖₂` over `Q`.
    pub vertical_pressure_variation: f64,
    /// `Σ ρ div u vol` over `Q`.
    pub renormalized_residual: f64,
}

impl EstimateReport {
    pub fn is_finite(&self) -> bool {
        [
            self.energy_lhs,
            self.energy_rhs,
            self.energy_constant,
            self.pressure_mean,
            self.pressure_l2,
            self.vertical_pressure_variation,
            self.renormalized_residual,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Pressure `p_R(ρ)` at every cell.
pub(crate) fn cell_pressure(state: &ThinFilmState, prob: &ThinFilmProblem) -> Result<Field<f64>> {
    let reg = prob.regularized(&state.grid, 1.0)?;
    let mut p = state.rho.clone();
    for v in p.data.iter_mut() {
        *v = reg.truncated_pressure(*v)?;
    }
    Ok(p)
}

/// `‖p − mean_Z p‖₂ / ‖p‖₂` and the column means of `p`.
pub(crate) fn vertical_variation(state: &ThinFilmState, p: &Field<f64>) -> (f64, alloc::vec::Vec<f64>) {
    let grid = &state.grid;
    let mut means = alloc::vec![0.0; grid.nx];
    let (mut dev, mut tot) = (0.0, 0.0);
    for (i, m) in means.iter_mut().enumerate() {
        *m = (0..grid.nz).map(|j| p.at(i, j)).sum::<f64>() / grid.nz as f64;
        let vol = grid.cell_volume(i);
        for j in 0..grid.nz {
            let v = p.at(i, j);
            dev += (v - *m) * (v - *m) * vol;
            tot += v * v * vol;
        }
    }
    let ratio = if tot > 0.0 { sqrt(dev / tot) } else { 0.0 };
    (ratio, means)
}

/// Computes the report with `ū = (s ψ(Z/η), 0)`, `η = h_min/2`.
pub fn estimates(state: &ThinFilmState, prob: &ThinFilmProblem) -> Result<EstimateReport> {
    let grid = &state.grid;
    let (nx, nz) = (grid.nx, grid.nz);
    let (dy, dz) = (grid.dy(), grid.dz());
    let eps = grid.eps;
    let eps2 = eps * eps;
    let s = prob.s;
    let eta = 0.5 * grid.gap.h_min();
    let ubar = |z: f64| s * bump(z / eta);
    let ubar_z = |z: f64| s * bump_slope(z / eta) / eta;

    // horizontal component on vertical faces
    let (mut l2, mut g2) = (0.0, 0.0);
    for i in 0..nx {
        let (l, r) = (grid.left(i), grid.right(i));
        let [h, hp, _] = grid.hf[i];
        let vol = h * dy * dz * eps;
        let e = |c: usize, j: usize| state.uh.at(c, j) - ubar(grid.zc(j) * grid.hf[c][0]);
        for j in 0..nz {
            let z = grid.zc(j) * h;
            let d = state.uh.at(i, j) - ubar(z);
            let (uz, _) = level_derivs(|jj| state.uh.at(i, jj), j, nz, s, 0.0, dz);
            let ez = uz / h - ubar_z(z);
            let ecol = |c: usize| level_derivs(|jj| e(c, jj), j, nz, 0.0, 0.0, dz).0;
            let ey = (e(r, j) - e(l, j)) / (2.0 * dy) - grid.zc(j) * hp / h * ecol(i);
            l2 += d * d * vol;
            g2 += (ey * ey + ez * ez / eps2) * vol;
        }
    }
    // vertical component V = εW; ū has none
    for i in 0..nx {
        let (l, r) = (grid.left(i), grid.right(i));
        let [h, hp, _] = grid.hc[i];
        let vol = h * dy * dz * eps;
        for k in 1..nz {
            let v = eps * state.w.at(i, k);
            let vz = |c: usize| three_point(state.w.at(c, k - 1), state.w.at(c, k), state.w.at(c, k + 1), dz, dz).0 * eps;
            let vy = eps * (state.w.at(r, k) - state.w.at(l, k)) / (2.0 * dy) - grid.zf(k) * hp / h * vz(i);
            let vzz = vz(i) / h;
            l2 += v * v * vol;
            g2 += (vy * vy + vzz * vzz / eps2) * vol;
        }
    }
    let energy_lhs = l2 + eps2 * g2;
    // ∫_{Q_ε} |∂_z ū|² = ε⁻¹ s² η⁻¹ ∫₀¹ ψ'² per unit length
    let slope2 = GaussLegendre::new(8).integrate(|t| bump_slope(t) * bump_slope(t), 0.0, 1.0);
    let energy_rhs = eps2 * s * s * slope2 / (eta * eps);
    let energy_constant = if energy_lhs == 0.0 { 0.0 } else { energy_lhs / energy_rhs };

    let p = cell_pressure(state, prob)?;
    let (mut pr, mut p2) = (0.0, 0.0);
    for i in 0..nx {
        let vol = grid.cell_volume(i) * eps;
        for j in 0..nz {
            pr += p.at(i, j) * state.rho.at(i, j) * vol;
            p2 += p.at(i, j) * p.at(i, j) * vol;
        }
    }
    let (vertical_pressure_variation, _) = vertical_variation(state, &p);

    let div = divergence(grid, &state.uh, &state.w);
    let mut renorm = 0.0;
    for i in 0..nx {
        let vol = grid.cell_volume(i);
        for j in 0..nz {
            renorm += state.rho.at(i, j) * div.at(i, j) * vol;
        }
    }
    Ok(EstimateReport {
        energy_lhs,
        energy_rhs,
        energy_constant,
        layer_width: eta,
        pressure_mean: pr / (eps * grid.area()),
        pressure_l2: p2,
        vertical_pressure_variation,
        renormalized_residual: renorm,
    })
}
