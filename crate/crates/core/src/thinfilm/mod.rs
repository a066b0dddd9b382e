//! Rescaled stationary compressible Navier–Stokes system on the film
//! domain `Q`, with artificial viscosity `δ`, truncated pressure and
//! `δ`-continuation, plus the `ε`-sweep against the Reynolds limit.
//!
//! Unknowns are the density `ρ` at cell centres, the horizontal velocity
//! `u` on vertical faces and the rescaled vertical velocity `W = V/ε` on
//! horizontal faces. Walls carry `u = s`, `W = 0` at `Z = 0` and
//! `u = W = 0` at `Z = h(y)`.

mod continuity;
mod estimates;
mod residual;
pub mod sweep;

use alloc::boxed::Box;
use alloc::vec::Vec;

pub use continuity::{cell_integral, solve_regularized_continuity, ContinuityOptions, ContinuitySolution};
pub use estimates::{estimates, EstimateReport};
pub use sweep::{epsilon_sweep, reynolds_reference, sweep_case, sweep_metrics, SweepCase, SweepMetrics, SweepRow};

use crate::domain::{GapProfile, GridQ};
use crate::eos::{PressureLaw, RegularizedEos};
use crate::jacobian::colored_jacobian;
use crate::math::{abs, max_abs, sqrt};
use crate::stagger::{pack, unpack, Field, Layout, WField};
use crate::{Error, Result};

use residual::{residual, Physics, STENCIL};

#[derive(Debug, Clone, PartialEq)]
pub struct ThinFilmProblem {
    pub gap: GapProfile,
    pub mu: f64,
    /// Bulk viscosity coefficient `λ` (not the Reynolds flux constant).
    pub lambda_visc: f64,
    pub s: f64,
    /// Film parameter `ε`.
    pub eps: f64,
    /// Total mass `∫_Q ρ`.
    pub mass: f64,
    pub law: PressureLaw,
    /// Truncation level `R` of the pressure.
    pub truncation: f64,
}

impl ThinFilmProblem {
    pub fn new(gap: GapProfile, mu: f64, lambda_visc: f64, s: f64, eps: f64, mass: f64, law: PressureLaw) -> Result<Self> {
        let truncation = 1e3 / law.rho_bar;
        let p = Self { gap, mu, lambda_visc, s, eps, mass, law, truncation };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.lambda_visc > 0.0) {
            return Err(Error::InvalidInput(alloc::format!(
                "viscosities must be positive (mu = {}, lambda = {})",
                self.mu, self.lambda_visc
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidInput(alloc::format!("eps must be positive, got {}", self.eps)));
        }
        if !self.s.is_finite() {
            return Err(Error::InvalidInput("sliding speed must be finite".into()));
        }
        let rm = self.mass / self.gap.area();
        if !(rm > 0.0 && rm < self.law.rho_bar) {
            return Err(Error::InvalidInput(alloc::format!(
                "mean density {rm} must lie in (0, rho_bar = {})",
                self.law.rho_bar
            )));
        }
        RegularizedEos::new(self.law, self.truncation, 1.0, rm)?;
        Ok(())
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let p = Self { eps, ..self.clone() };
        p.validate()?;
        Ok(p)
    }

    /// Regularized law at artificial viscosity `delta` with `ρ_M` taken on
    /// the discrete domain so that the mass identity is exact.
    pub fn regularized(&self, grid: &GridQ, delta: f64) -> Result<RegularizedEos> {
        RegularizedEos::new(self.law, self.truncation, delta, self.mass / grid.area())
    }

    fn physics(&self, reg: RegularizedEos) -> Physics {
        Physics {
            eps: self.eps,
            mu: self.mu,
            lambda_visc: self.lambda_visc,
            s: self.s,
            reg,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ThinFilmOptions {
    pub nx: usize,
    pub nz: usize,
    /// Under-relaxation of the Picard sweeps.
    pub relaxation: f64,
    /// Relaxed Picard sweeps run at the start of each `δ` stage.
    pub picard_sweeps: usize,
    pub delta_start: f64,
    pub delta_factor: f64,
    pub delta_min: f64,
    /// Max-norm of the scaled residual accepted by Newton.
    pub newton_tol: f64,
    /// Newton also stops once a full update is below this, relative to the
    /// iterate (the residual then sits at its round-off floor).
    pub step_tol: f64,
    pub max_newton: usize,
    /// Intermediate `δ` insertions allowed when a stage fails.
    pub max_refine: usize,
}

impl Default for ThinFilmOptions {
    fn default() -> Self {
        Self {
            nx: 64,
            nz: 32,
            relaxation: 0.7,
            picard_sweeps: 2,
            delta_start: 1.0,
            delta_factor: 0.5,
            delta_min: 1e-3,
            newton_tol: 1e-10,
            step_tol: 1e-13,
            max_newton: 40,
            max_refine: 4,
        }
    }
}

impl ThinFilmOptions {
    /// `δ_start, δ_start·f, …` down to and ending at `δ_min`.
    pub fn delta_schedule(&self) -> Vec<f64> {
        let mut v = Vec::new();
        let mut d = self.delta_start;
        while d > self.delta_min * (1.0 + 1e-12) {
            v.push(d);
            d *= self.delta_factor;
        }
        v.push(self.delta_min);
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThinFilmState {
    pub grid: GridQ,
    pub rho: Field<f64>,
    /// Horizontal velocity on vertical faces.
    pub uh: Field<f64>,
    /// Rescaled vertical velocity `W = V/ε` on horizontal faces.
    pub w: WField<f64>,
    /// Artificial viscosity of the last converged stage.
    pub delta: f64,
    /// Scaled residual after every outer iteration.
    pub residual_history: Vec<f64>,
    /// Total mass after every outer iteration.
    pub mass_history: Vec<f64>,
}

impl ThinFilmState {
    /// Uniform density `ρ_M` with the Couette profile `u = s(1 − ζ)`.
    pub fn initial(prob: &ThinFilmProblem, grid: GridQ) -> Self {
        let (nx, nz) = (grid.nx, grid.nz);
        let rm = prob.mass / grid.area();
        let rho = Field::filled(nx, nz, rm);
        let mut uh = Field::filled(nx, nz, 0.0);
        for i in 0..nx {
            for j in 0..nz {
                uh.set(i, j, prob.s * (1.0 - grid.zc(j)));
            }
        }
        let w = WField::filled(nx, nz, 0.0);
        Self {
            grid,
            rho,
            uh,
            w,
            delta: f64::NAN,
            residual_history: Vec::new(),
            mass_history: Vec::new(),
        }
    }

    /// Physical vertical velocity `V = ε W` on horizontal faces.
    pub fn vertical_velocity(&self) -> WField<f64> {
        let mut v = self.w.clone();
        for x in v.data.iter_mut() {
            *x *= self.grid.eps;
        }
        v
    }

    pub fn mass(&self) -> f64 {
        cell_integral(&self.grid, &self.rho)
    }

    fn vector(&self) -> Vec<f64> {
        pack(&Layout::new(&self.grid), &self.rho, &self.uh, &self.w)
    }

    fn load(&mut self, x: &[f64]) {
        let (r, u, w) = unpack(&Layout::new(&self.grid), x);
        self.rho = r;
        self.uh = u;
        self.w = w;
    }
}

#[derive(Debug, Clone)]
pub struct ThinFilmSolution {
    pub state: ThinFilmState,
    pub report: EstimateReport,
}

/// Failure of [`solve_thinfilm`] with the last state that converged.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{error}")]
pub struct ThinFilmFailure {
    pub error: Error,
    pub last_converged: Option<Box<ThinFilmState>>,
}

impl From<ThinFilmFailure> for Error {
    fn from(f: ThinFilmFailure) -> Self {
        f.error
    }
}

struct Newton<'a> {
    grid: &'a GridQ,
    lay: Layout,
    ph: Physics,
    frozen: Option<&'a Field<f64>>,
}

impl Newton<'_> {
    fn residual(&self, x: &[f64]) -> Vec<f64> {
        residual(self.grid, &self.lay, &self.ph, self.frozen, x)
    }

    /// One damped Newton step; returns the new residual norm and whether
    /// the full update was below `step_tol` relative to the iterate.
    fn step(&self, x: &mut Vec<f64>, r: &[f64], step_tol: f64) -> Result<(f64, bool)> {
        let jac = colored_jacobian(&self.lay, x, STENCIL, |xd| residual(self.grid, &self.lay, &self.ph, self.frozen, xd));
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let dx = jac.lu()?.solve(&neg);
        let mut alpha: f64 = 1.0;
        for i in 0..self.grid.nx {
            for j in 0..self.grid.nz {
                let k = self.lay.cell(i, j);
                if dx[k] < 0.0 {
                    alpha = alpha.min(0.9 * x[k] / -dx[k]);
                }
            }
        }
        let norm = max_abs(r);
        let tiny = max_abs(&dx) <= step_tol * (1.0 + max_abs(x));
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + alpha * d).collect();
            let rt = self.residual(&trial);
            let nt = max_abs(&rt);
            if nt < norm || (tiny && alpha == 1.0) {
                *x = trial;
                return Ok((nt, tiny));
            }
            alpha *= 0.5;
        }
        Err(Error::NewtonNonconvergence { iterations: 0, residual: norm })
    }
}

/// Linear solve for the velocities with frozen density and convection
/// linearized about the current velocities.
pub fn momentum_step(state: &ThinFilmState, prob: &ThinFilmProblem, delta: f64) -> Result<(Field<f64>, WField<f64>)> {
    let reg = prob.regularized(&state.grid, delta)?;
    let nt = Newton {
        grid: &state.grid,
        lay: Layout::new(&state.grid),
        ph: prob.physics(reg),
        frozen: Some(&state.rho),
    };
    let mut x = state.vector();
    let r = nt.residual(&x);
    if max_abs(&r) == 0.0 {
        return Ok((state.uh.clone(), state.w.clone()));
    }
    let jac = colored_jacobian(&nt.lay, &x, STENCIL, |xd| residual(nt.grid, &nt.lay, &nt.ph, nt.frozen, xd));
    let neg: Vec<f64> = r.iter().map(|v| -v).collect();
    let dx = jac.lu()?.solve(&neg);
    for (a, d) in x.iter_mut().zip(&dx) {
        *a += d;
    }
    let (_, u, w) = unpack(&nt.lay, &x);
    Ok((u, w))
}

/// Max-norm of the scaled residual of the full system at `state`.
pub fn state_residual(state: &ThinFilmState, prob: &ThinFilmProblem, delta: f64) -> Result<f64> {
    let reg = prob.regularized(&state.grid, delta)?;
    let lay = Layout::new(&state.grid);
    Ok(max_abs(&residual(&state.grid, &lay, &prob.physics(reg), None, &state.vector())))
}

fn stage(prob: &ThinFilmProblem, state: &mut ThinFilmState, delta: f64, opts: &ThinFilmOptions) -> Result<f64> {
    let grid = state.grid.clone();
    let reg = prob.regularized(&grid, delta)?;
    let rho_bar = prob.law.rho_bar;
    let source = Field::filled(grid.nx, grid.nz, delta * reg.rho_m);
    for _ in 0..opts.picard_sweeps {
        let rho_new = solve_regularized_continuity(&grid, &state.uh, &state.w, &source, delta, rho_bar, &ContinuityOptions::default())?.rho;
        let om = opts.relaxation;
        let mut trial = state.clone();
        for (a, b) in trial.rho.data.iter_mut().zip(&rho_new.data) {
            *a = om * b + (1.0 - om) * *a;
        }
        let (u, w) = momentum_step(&trial, prob, delta)?;
        for (a, b) in trial.uh.data.iter_mut().zip(&u.data) {
            *a = om * b + (1.0 - om) * *a;
        }
        for (a, b) in trial.w.data.iter_mut().zip(&w.data) {
            *a = om * b + (1.0 - om) * *a;
        }
        let before = state_residual(state, prob, delta)?;
        let after = state_residual(&trial, prob, delta)?;
        if !(after < before) {
            break;
        }
        trial.residual_history.push(after);
        let m = trial.mass();
        trial.mass_history.push(m);
        *state = trial;
    }
    let nt = Newton {
        grid: &grid,
        lay: Layout::new(&grid),
        ph: prob.physics(reg),
        frozen: None,
    };
    let mut x = state.vector();
    let mut r = nt.residual(&x);
    let mut norm = max_abs(&r);
    let mut it = 0;
    while norm > opts.newton_tol {
        if it >= opts.max_newton {
            return Err(Error::NewtonNonconvergence { iterations: it, residual: norm });
        }
        it += 1;
        let (n, tiny) = nt.step(&mut x, &r, opts.step_tol).map_err(|e| match e {
            Error::NewtonNonconvergence { residual, .. } => Error::NewtonNonconvergence { iterations: it, residual },
            e => e,
        })?;
        norm = n;
        r = nt.residual(&x);
        state.load(&x);
        state.residual_history.push(norm);
        let m = state.mass();
        state.mass_history.push(m);
        if tiny {
            break;
        }
    }
    state.load(&x);
    state.delta = delta;
    Ok(norm)
}

/// Solves the thin-film problem by `δ`-continuation.
pub fn solve_thinfilm(prob: &ThinFilmProblem, opts: &ThinFilmOptions) -> core::result::Result<ThinFilmSolution, ThinFilmFailure> {
    let fail = |error: Error, last: Option<&ThinFilmState>| ThinFilmFailure {
        error,
        last_converged: last.map(|s| Box::new(s.clone())),
    };
    let grid = GridQ::new(&prob.gap, opts.nx, opts.nz, prob.eps).map_err(|e| fail(e, None))?;
    let mut state = ThinFilmState::initial(prob, grid);
    state.mass_history.push(state.mass());
    let mut converged: Option<ThinFilmState> = None;
    let mut prev_delta: Option<f64> = None;
    for target in opts.delta_schedule() {
        let mut attempt = target;
        let mut refinements = 0;
        loop {
            let mut trial = state.clone();
            match stage(prob, &mut trial, attempt, opts) {
                Ok(_) => {
                    state = trial;
                    converged = Some(state.clone());
                    prev_delta = Some(attempt);
                    if attempt == target {
                        break;
                    }
                    attempt = target;
                }
                Err(e) => {
                    let residual = match &e {
                        Error::NewtonNonconvergence { residual, .. } => *residual,
                        _ => f64::NAN,
                    };
                    match prev_delta {
                        Some(pd) if refinements < opts.max_refine => {
                            refinements += 1;
                            attempt = sqrt(pd * attempt);
                        }
                        _ => {
                            return Err(fail(
                                Error::ContinuationStall { delta: attempt, residual, last_delta: prev_delta },
                                converged.as_ref(),
                            ))
                        }
                    }
                }
            }
        }
    }
    let report = estimates(&state, prob).map_err(|e| fail(e, Some(&state)))?;
    Ok(ThinFilmSolution { state, report })
}

/// Largest deviation of the recorded masses from the target.
pub fn mass_drift(state: &ThinFilmState, target: f64) -> f64 {
    state.mass_history.iter().fold(0.0, |m, v| m.max(abs(v - target)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::Dual;
    use crate::linalg::DenseMatrix;

    fn problem(s: f64, amp: f64, eps: f64) -> ThinFilmProblem {
        let gap = if amp == 0.0 {
            GapProfile::constant(1.0).unwrap()
        } else {
            GapProfile::cosine(1.0, alloc::vec![amp]).unwrap()
        };
        ThinFilmProblem::new(gap, 1.0, 1.0, s, eps, 0.4, PressureLaw::hard_sphere()).unwrap()
    }

    fn perturbed_state(prob: &ThinFilmProblem, nx: usize, nz: usize) -> ThinFilmState {
        let grid = GridQ::new(&prob.gap, nx, nz, prob.eps).unwrap();
        let mut st = ThinFilmState::initial(prob, grid);
        let mut seed = 3u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        for v in st.rho.data.iter_mut() {
            *v += 0.05 * rnd();
        }
        for v in st.uh.data.iter_mut() {
            *v += 0.1 * rnd();
        }
        for i in 0..nx {
            for k in 1..nz {
                st.w.set(i, k, 0.1 * rnd());
            }
        }
        st
    }

    #[test]
    fn colored_jacobian_matches_dense_differences() {
        // wider reach than the solver needs would hide colouring collisions,
        // so use nx = 8 (four column classes) and a full-dual reference
        let prob = problem(1.0, 0.3, 0.3);
        let st = perturbed_state(&prob, 8, 6);
        let reg = prob.regularized(&st.grid, 0.1).unwrap();
        let lay = Layout::new(&st.grid);
        let ph = prob.physics(reg);
        let x = st.vector();
        let band = colored_jacobian(&lay, &x, STENCIL, |xd| residual(&st.grid, &lay, &ph, None, xd));
        let n = lay.len();
        let mut dense = DenseMatrix::zeros(n);
        for c in 0..n {
            let xd: Vec<Dual> = x.iter().enumerate().map(|(k, v)| Dual::var(*v, if k == c { 1.0 } else { 0.0 })).collect();
            let r = residual(&st.grid, &lay, &ph, None, &xd);
            for (row, v) in r.iter().enumerate() {
                dense.set(row, c, v.du);
            }
        }
        let mut worst: f64 = 0.0;
        for rr in 0..n {
            for c in 0..n {
                worst = worst.max((dense.get(rr, c) - band.get(rr, c)).abs());
            }
        }
        assert!(worst < 1e-12, "colouring mismatch {worst}");
        // and the dual derivative agrees with a central difference
        let c = lay.face_u(3, 2);
        let e = 1e-6;
        let mut xp = x.clone();
        xp[c] += e;
        let mut xm = x.clone();
        xm[c] -= e;
        let rp = residual(&st.grid, &lay, &ph, None, &xp);
        let rm = residual(&st.grid, &lay, &ph, None, &xm);
        for rr in 0..n {
            let fd = (rp[rr] - rm[rr]) / (2.0 * e);
            assert!((fd - dense.get(rr, c)).abs() < 1e-5 * (1.0 + fd.abs()), "row {rr}");
        }
    }

    #[test]
    fn rest_state_is_exact() {
        let prob = problem(0.0, 0.0, 0.1);
        let grid = GridQ::new(&prob.gap, 8, 6, prob.eps).unwrap();
        let st = ThinFilmState::initial(&prob, grid);
        assert_eq!(state_residual(&st, &prob, 0.01).unwrap(), 0.0);
    }

    #[test]
    fn couette_from_rest_in_one_step() {
        let prob = problem(1.5, 0.0, 0.2);
        let grid = GridQ::new(&prob.gap, 8, 8, prob.eps).unwrap();
        let mut st = ThinFilmState::initial(&prob, grid);
        st.uh = Field::filled(8, 8, 0.0);
        // the zeroth-order δ term is the only obstruction to exact shear
        let (u, w) = momentum_step(&st, &prob, 1e-12).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert!((u.at(i, j) - 1.5 * (1.0 - st.grid.zc(j))).abs() < 1e-10);
            }
        }
        assert!(w.data.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn small_problem_converges_and_keeps_mass() {
        let prob = problem(1.0, 0.3, 0.2);
        let opts = ThinFilmOptions { nx: 8, nz: 6, delta_min: 0.05, ..Default::default() };
        let sol = solve_thinfilm(&prob, &opts).unwrap();
        let target = prob.mass / sol.state.grid.area();
        let m = sol.state.mass() / sol.state.grid.area();
        assert!((m - target).abs() < 1e-12);
        assert!(mass_drift(&sol.state, prob.mass / sol.state.grid.area() * sol.state.grid.area()) < 1e-8);
        assert!(sol.state.rho.data.iter().all(|r| *r > 0.0));
    }
}
