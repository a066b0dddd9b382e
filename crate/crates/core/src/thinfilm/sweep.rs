//! `ε`-sweep of the thin-film problem against the Reynolds limit with the
//! same gap, viscosity, wall speed and mass.

use alloc::vec::Vec;

use crate::math::sqrt;
use crate::reynolds::{solve_reynolds, velocity_shear, ReynoldsProblem, ReynoldsSolution, ShootingOptions};
use crate::stagger::level_derivs;
use crate::{Error, Result};

use super::estimates::{cell_pressure, vertical_variation};
use super::{solve_thinfilm, state_residual, EstimateReport, ThinFilmOptions, ThinFilmProblem, ThinFilmState};

/// Distances of one thin-film state from the Reynolds limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepMetrics {
    /// `‖p − mean_Z p‖₂ / ‖p‖₂`.
    pub vertical_variation: f64,
    /// `‖mean_Z p − p_Reynolds‖_{L²(0,1)}`.
    pub pressure_distance: f64,
    /// `‖∂_Z u − ∂_Z u_Reynolds‖_{L²(Q)}`.
    pub shear_distance: f64,
}

#[derive(Debug, Clone)]
pub struct SweepCase {
    pub metrics: SweepMetrics,
    pub report: EstimateReport,
    /// Artificial viscosity of the final stage.
    pub delta: f64,
    /// Scaled residual of the final state.
    pub residual: f64,
    /// Outer iterations over all stages.
    pub iterations: usize,
    /// Largest deviation of the recorded masses from the target.
    pub mass_drift: f64,
    pub state: ThinFilmState,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub eps: f64,
    pub outcome: core::result::Result<SweepCase, Error>,
}

/// Reynolds problem matched to a thin-film template, solved at the
/// thin-film column centres.
pub fn reynolds_reference(template: &ThinFilmProblem, nx: usize) -> Result<(ReynoldsProblem, ReynoldsSolution)> {
    let rp = ReynoldsProblem::new(template.gap.clone(), template.mu, template.s, template.mass, template.law)?;
    let sol = solve_reynolds(&rp, nx, &ShootingOptions::default())?;
    Ok((rp, sol))
}

/// Metrics of a converged state against the Reynolds solution.
pub fn sweep_metrics(
    state: &ThinFilmState,
    prob: &ThinFilmProblem,
    rp: &ReynoldsProblem,
    rs: &ReynoldsSolution,
) -> Result<SweepMetrics> {
    let grid = &state.grid;
    let (nx, nz) = (grid.nx, grid.nz);
    if rs.grid.n != nx {
        return Err(Error::InvalidInput(alloc::format!(
            "Reynolds grid has {} cells, thin-film grid {nx}",
            rs.grid.n
        )));
    }
    let (dy, dz) = (grid.dy(), grid.dz());
    let p = cell_pressure(state, prob)?;
    let (vertical_variation, means) = vertical_variation(state, &p);
    let pressure_distance = sqrt(means.iter().zip(&rs.p).map(|(a, b)| (a - b) * (a - b) * dy).sum::<f64>());

    let faces: Vec<f64> = (0..nx).map(|i| grid.yf(i) % 1.0).collect();
    let mut order: Vec<usize> = (0..nx).collect();
    order.sort_by(|a, b| faces[*a].total_cmp(&faces[*b]));
    let sorted: Vec<f64> = order.iter().map(|i| faces[*i]).collect();
    let sampled = rs.sample_density(rp, &sorted)?;
    let mut rho_f = alloc::vec![0.0; nx];
    for (k, i) in order.iter().enumerate() {
        rho_f[*i] = sampled[k];
    }
    let mut shear = 0.0;
    for i in 0..nx {
        let h = grid.hf[i][0];
        for j in 0..nz {
            let (uz, _) = level_derivs(|jj| state.uh.at(i, jj), j, nz, prob.s, 0.0, dz);
            let z = grid.zc(j) * h;
            let d = uz / h - velocity_shear(rp, faces[i], rho_f[i], rs.lambda_flux, z);
            shear += d * d * h * dy * dz;
        }
    }
    Ok(SweepMetrics {
        vertical_variation,
        pressure_distance,
        shear_distance: sqrt(shear),
    })
}

/// Solves one `ε` of the sweep.
pub fn sweep_case(
    template: &ThinFilmProblem,
    eps: f64,
    opts: &ThinFilmOptions,
    rp: &ReynoldsProblem,
    rs: &ReynoldsSolution,
) -> Result<SweepCase> {
    let prob = template.with_eps(eps)?;
    let sol = solve_thinfilm(&prob, opts)?;
    let metrics = sweep_metrics(&sol.state, &prob, rp, rs)?;
    let residual = state_residual(&sol.state, &prob, sol.state.delta)?;
    let target = prob.mass;
    Ok(SweepCase {
        metrics,
        report: sol.report,
        delta: sol.state.delta,
        residual,
        iterations: sol.state.residual_history.len(),
        mass_drift: super::mass_drift(&sol.state, target),
        state: sol.state,
    })
}

/// Sequential sweep; failures are recorded per row and the sweep goes on.
pub fn epsilon_sweep(template: &ThinFilmProblem, eps_list: &[f64], opts: &ThinFilmOptions) -> Result<Vec<SweepRow>> {
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("eps list must be strictly decreasing".into()));
    }
    let (rp, rs) = reynolds_reference(template, opts.nx)?;
    Ok(eps_list
        .iter()
        .map(|&eps| SweepRow {
            eps,
            outcome: sweep_case(template, eps, opts, &rp, &rs),
        })
        .collect())
}
