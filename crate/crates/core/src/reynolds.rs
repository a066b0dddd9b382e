//! Stationary compressible Reynolds problem on the unit torus.
//!
//! The limit system `−μ ∂²_Z v + ∂_y p(ρ) = 0`, `v(0) = s`, `v(h) = 0`
//! together with mass conservation has the first integral
//! `(h³/12μ) ρ ∂_y p − ρ h s / 2 = λ`, i.e. `ρ q = −λ` for the flux
//! `q = −h³ ∂_y p / 12μ + s h / 2`. Solving it for `ρ'` gives a scalar ODE
//! whose periodic solution is found by shooting, and the constant `λ` is
//! fixed by the prescribed mass.

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::{GapProfile, Grid1D};
use crate::eos::PressureLaw;
use crate::linalg::DenseMatrix;
use crate::math::{abs, log2, max_abs};
use crate::ode::{Bounds, DormandPrince, Exit};
use crate::quad::GaussLegendre;
use crate::roots::brent;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ReynoldsProblem {
    pub gap: GapProfile,
    /// Shear viscosity.
    pub mu: f64,
    /// Sliding speed of the lower wall.
    pub s: f64,
    /// Total mass `∫ h ρ dy`.
    pub mass: f64,
    pub law: PressureLaw,
}

impl ReynoldsProblem {
    pub fn new(gap: GapProfile, mu: f64, s: f64, mass: f64, law: PressureLaw) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::InvalidInput(alloc::format!("mu must be positive, got {mu}")));
        }
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!("s must be >= 0, got {s}")));
        }
        let cap = law.rho_bar * gap.area();
        if !(mass > 0.0 && mass < cap) {
            return Err(Error::InvalidInput(alloc::format!(
                "mass must lie in (0, rho_bar * |Q|) = (0, {cap}), got {mass}"
            )));
        }
        Ok(Self { gap, mu, s, mass, law })
    }

    pub fn mean_density(&self) -> f64 {
        self.mass / self.gap.area()
    }

    /// `ρ'(y)` from the first integral with flux constant `lambda_flux`.
    pub fn ode_rhs(&self, y: f64, rho: f64, lambda_flux: f64) -> Result<f64> {
        if !(rho > 0.0 && rho < self.law.rho_bar) {
            return Err(Error::Domain {
                quantity: "density",
                value: rho,
                lower: 0.0,
                upper: self.law.rho_bar,
            });
        }
        Ok(self.rhs_raw(y, rho, lambda_flux))
    }

    fn rhs_raw(&self, y: f64, rho: f64, lambda_flux: f64) -> f64 {
        let h = self.gap.h(y);
        let num = 6.0 * self.mu * self.s / (h * h) + 12.0 * self.mu * lambda_flux / (h * h * h * rho);
        num / self.law.dpressure_raw(rho)
    }

    /// `∂_y p` recovered from the first integral.
    pub fn pressure_gradient(&self, y: f64, rho: f64, lambda_flux: f64) -> f64 {
        let h = self.gap.h(y);
        (rho * h * self.s / 2.0 + lambda_flux) * 12.0 * self.mu / (h * h * h * rho)
    }

    /// Most negative admissible flux constant: the value for which the
    /// first integral is solved by `ρ ≡ ρ̄` on average.
    pub fn lambda_limit(&self) -> Result<f64> {
        let i2 = self.gap.power_integral(-2)?;
        let i3 = self.gap.power_integral(-3)?;
        Ok(-self.law.rho_bar * self.s * i2 / (2.0 * i3))
    }
}

/// Tolerances of the shooting solver.
#[derive(Debug, Clone, Copy)]
pub struct ShootingOptions {
    /// Period defect `|ρ(1) − ρ(0)|` accepted by the inner solve.
    pub tol_shoot: f64,
    /// Mass mismatch accepted by the outer solve.
    pub tol_mass: f64,
    pub ode: DormandPrince,
    /// Starting flux constant for the outer bracket search.
    pub initial_lambda: Option<f64>,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            tol_shoot: 1e-10,
            tol_mass: 1e-10,
            ode: DormandPrince {
                rtol: 1e-13,
                atol: 1e-15,
                h_min: 1e-14,
                max_steps: 2_000_000,
            },
            initial_lambda: None,
        }
    }
}

/// One trajectory of the density ODE.
#[derive(Debug, Clone)]
pub struct PeriodPath {
    pub exit: Exit,
    /// Density where the integration stopped.
    pub end_rho: f64,
    /// `∫ h ρ dy` over the integrated part.
    pub mass: f64,
    /// Density at the requested sample points reached before stopping.
    pub samples: Vec<f64>,
}

impl PeriodPath {
    /// Sign of the period defect with bound hits classified.
    pub fn defect_sign(&self, rho0: f64) -> i8 {
        match self.exit {
            Exit::HitFloor { .. } => -1,
            Exit::HitCeiling { .. } => 1,
            Exit::Completed => {
                let d = self.end_rho - rho0;
                if d > 0.0 {
                    1
                } else if d < 0.0 {
                    -1
                } else {
                    0
                }
            }
        }
    }
}

fn bounds(rho_bar: f64) -> Bounds {
    Bounds {
        component: 0,
        floor: rho_bar * 1e-9,
        ceiling: rho_bar * (1.0 - 1e-12),
    }
}

/// Orientation of a shot. Forward shots grow perturbations wherever the
/// film is dilute; backward shots damp them there.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Integrates the density ODE over `[0, 1]` from `rho0`, recording the
/// density at the sorted points `at ⊂ [0, 1]`.
pub fn integrate_period(
    prob: &ReynoldsProblem,
    lambda_flux: f64,
    rho0: f64,
    at: &[f64],
    ode: &DormandPrince,
) -> Result<PeriodPath> {
    integrate_period_in(prob, lambda_flux, rho0, at, ode, Direction::Forward)
}

/// As [`integrate_period`]; a backward shot starts from `ρ(1) = rho0` and
/// ends at `y = 0`. Samples are returned in the order of `at` either way.
pub fn integrate_period_in(
    prob: &ReynoldsProblem,
    lambda_flux: f64,
    rho0: f64,
    at: &[f64],
    ode: &DormandPrince,
    dir: Direction,
) -> Result<PeriodPath> {
    if !(rho0 > 0.0 && rho0 < prob.law.rho_bar) {
        return Err(Error::Domain {
            quantity: "initial density",
            value: rho0,
            lower: 0.0,
            upper: prob.law.rho_bar,
        });
    }
    let rb = prob.law.rho_bar;
    let (sign, y_of) = match dir {
        Direction::Forward => (1.0, 0.0),
        Direction::Backward => (-1.0, 1.0),
    };
    // y = y_of + sign·t
    let rhs = |t: f64, u: &[f64; 2]| {
        let r = u[0];
        let y = y_of + sign * t;
        if r > 0.0 && r < rb {
            Some([sign * prob.rhs_raw(y, r, lambda_flux), prob.gap.h(y) * r])
        } else {
            None
        }
    };
    let targets: Vec<f64> = match dir {
        Direction::Forward => at.to_vec(),
        Direction::Backward => at.iter().rev().map(|y| 1.0 - y).collect(),
    };
    let mut state = [rho0, 0.0];
    let mut t = 0.0;
    let mut samples = Vec::with_capacity(at.len());
    let mut exit = Exit::Completed;
    for &target in targets.iter().chain(core::iter::once(&1.0)) {
        let out = ode.integrate(rhs, t, target, state, Some(bounds(rb)))?;
        state = out.y;
        t = out.t;
        if out.exit != Exit::Completed {
            exit = out.exit;
            break;
        }
        if samples.len() < at.len() {
            samples.push(state[0]);
        }
    }
    if dir == Direction::Backward {
        samples.reverse();
    }
    Ok(PeriodPath {
        exit,
        end_rho: state[0],
        mass: state[1],
        samples,
    })
}

/// Signed period defect used for root finding; bound hits count as a full
/// `∓ρ̄` so that they bracket like an undershoot or overshoot.
fn defect(prob: &ReynoldsProblem, lambda_flux: f64, rho0: f64, ode: &DormandPrince, dir: Direction) -> Result<f64> {
    let path = integrate_period_in(prob, lambda_flux, rho0, &[], ode, dir)?;
    Ok(match path.exit {
        Exit::Completed => path.end_rho - rho0,
        Exit::HitFloor { .. } => -prob.law.rho_bar,
        Exit::HitCeiling { .. } => prob.law.rho_bar,
    })
}

/// Periodic solution found by shooting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicOrbit {
    /// `ρ(0) = ρ(1)`.
    pub rho0: f64,
    /// Orientation in which the orbit was resolved.
    pub direction: Direction,
}

/// Periodic solution for a given flux constant: forward shooting, then
/// backward shooting if the forward period map has no resolvable root.
pub fn shoot_periodic(prob: &ReynoldsProblem, lambda_flux: f64, opts: &ShootingOptions) -> Result<PeriodicOrbit> {
    match shoot_in(prob, lambda_flux, opts, Direction::Forward) {
        Ok(rho0) => Ok(PeriodicOrbit { rho0, direction: Direction::Forward }),
        Err(e @ (Error::ShootingUnstable { .. } | Error::NoBracket { .. })) => {
            match shoot_in(prob, lambda_flux, opts, Direction::Backward) {
                Ok(rho0) => Ok(PeriodicOrbit { rho0, direction: Direction::Backward }),
                Err(_) => Err(e),
            }
        }
        Err(e) => Err(e),
    }
}

fn shoot_in(prob: &ReynoldsProblem, lambda_flux: f64, opts: &ShootingOptions, dir: Direction) -> Result<f64> {
    let rb = prob.law.rho_bar;
    if prob.s == 0.0 {
        if lambda_flux == 0.0 {
            return Ok(prob.mean_density());
        }
        return Err(Error::NoBracket { lambda_flux });
    }
    if !(lambda_flux < 0.0) {
        return Err(Error::NoBracket { lambda_flux });
    }
    let ode = &opts.ode;
    // scan candidates: dense near both ends where trajectories are stiff
    let mut grid: Vec<f64> = Vec::new();
    for k in (1..=12).rev() {
        grid.push(rb * crate::math::powi(10.0, -k));
    }
    for k in 1..64 {
        grid.push(rb * k as f64 / 64.0);
    }
    for k in 2..=12 {
        grid.push(rb * (1.0 - crate::math::powi(10.0, -k)));
    }
    // start the scan near the constant-gap guess to save integrations
    let guess = (-2.0 * lambda_flux / (prob.gap.mean * prob.s)).clamp(grid[0], grid[grid.len() - 1]);
    let start = grid.iter().position(|&g| g >= guess).unwrap_or(grid.len() - 1);
    let mut cache: Vec<Option<f64>> = vec![None; grid.len()];
    let eval = |i: usize, cache: &mut Vec<Option<f64>>| -> Result<f64> {
        if let Some(v) = cache[i] {
            return Ok(v);
        }
        let v = defect(prob, lambda_flux, grid[i], ode, dir)?;
        cache[i] = Some(v);
        Ok(v)
    };
    // nearest sign change on either side; the two orientations of the
    // period map cross zero in opposite senses
    let d0 = eval(start, &mut cache)?;
    if d0 == 0.0 {
        return Ok(grid[start]);
    }
    let mut bracket = None;
    for step in 1..grid.len() {
        if let Some(i) = start.checked_sub(step) {
            if (eval(i, &mut cache)? > 0.0) != (d0 > 0.0) || cache[i] == Some(0.0) {
                bracket = Some((i, i + 1));
                break;
            }
        }
        let i = start + step;
        if i < grid.len() {
            if (eval(i, &mut cache)? > 0.0) != (d0 > 0.0) || cache[i] == Some(0.0) {
                bracket = Some((i - 1, i));
                break;
            }
        } else if step > start {
            break;
        }
    }
    let (lo, hi) = bracket.ok_or(Error::NoBracket { lambda_flux })?;
    let (flo, fhi) = (eval(lo, &mut cache)?, eval(hi, &mut cache)?);
    if flo == 0.0 {
        return Ok(grid[lo]);
    }
    if fhi == 0.0 {
        return Ok(grid[hi]);
    }
    let root = brent(
        |r| defect(prob, lambda_flux, r, ode, dir),
        grid[lo],
        grid[hi],
        flo,
        fhi,
        1e-15 * rb,
        200,
    )?;
    // a sign change across a jump of the period map is not a root
    let d = defect(prob, lambda_flux, root.x, ode, dir)?;
    if abs(d) > opts.tol_shoot {
        return Err(Error::ShootingUnstable { lambda_flux, defect: d });
    }
    Ok(root.x)
}

/// Which algorithm produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Shooting,
    FiniteVolume,
    Analytic,
}

impl SolverKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverKind::Shooting => "shooting",
            SolverKind::FiniteVolume => "fv",
            SolverKind::Analytic => "analytic",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReynoldsResiduals {
    /// `max_i |ρ_i q_i + λ| / |λ|` with `∂_y p` from differentiating the
    /// computed pressure (absolute when `λ = 0`).
    pub first_integral: f64,
    /// `|ρ(1) − ρ(0)|` (zero for grid-based solutions).
    pub periodicity: f64,
    /// `|∫ h ρ − M|`.
    pub mass: f64,
}

#[derive(Debug, Clone)]
pub struct ReynoldsSolution {
    pub grid: Grid1D,
    /// Density at cell centers.
    pub rho: Vec<f64>,
    /// Pressure at cell centers.
    pub p: Vec<f64>,
    /// `∂_y p` from the first integral.
    pub dpdy: Vec<f64>,
    pub lambda_flux: f64,
    /// Density at `y = 0`.
    pub rho0: f64,
    /// Achieved `∫ h ρ dy`.
    pub mass: f64,
    pub residuals: ReynoldsResiduals,
    pub solver: SolverKind,
    /// Orientation of the final shot (forward for grid-based solutions).
    pub direction: Direction,
    /// Newton iterations or outer root-finder evaluations.
    pub iterations: usize,
}

impl ReynoldsSolution {
    fn assemble(
        prob: &ReynoldsProblem,
        grid: Grid1D,
        rho: Vec<f64>,
        lambda_flux: f64,
        rho0: f64,
        mass: f64,
        periodicity: f64,
        solver: SolverKind,
        iterations: usize,
    ) -> Self {
        let p: Vec<f64> = rho.iter().map(|r| prob.law.pressure_raw(*r)).collect();
        let dpdy: Vec<f64> = rho
            .iter()
            .enumerate()
            .map(|(i, r)| prob.pressure_gradient(grid.center(i), *r, lambda_flux))
            .collect();
        let fd = periodic_derivative(&p, grid.dy());
        let mut worst: f64 = 0.0;
        for i in 0..grid.n {
            let y = grid.center(i);
            let h = prob.gap.h(y);
            let q = -h * h * h / (12.0 * prob.mu) * fd[i] + prob.s * h / 2.0;
            worst = worst.max(abs(rho[i] * q + lambda_flux));
        }
        let first_integral = if lambda_flux != 0.0 { worst / abs(lambda_flux) } else { worst };
        Self {
            grid,
            rho,
            p,
            dpdy,
            lambda_flux,
            rho0,
            mass,
            residuals: ReynoldsResiduals {
                first_integral,
                periodicity,
                mass: abs(mass - prob.mass),
            },
            solver,
            direction: Direction::Forward,
            iterations,
        }
    }

    /// Density at an arbitrary `y` by periodic four-point interpolation.
    pub fn density_at(&self, y: f64) -> f64 {
        self.grid.interpolate(&self.rho, y)
    }

    /// Density at sorted points of `[0, 1]`, re-integrating the ODE for
    /// shooting solutions and interpolating otherwise.
    pub fn sample_density(&self, prob: &ReynoldsProblem, at: &[f64]) -> Result<Vec<f64>> {
        match self.solver {
            SolverKind::Shooting => {
                let ode = ShootingOptions::default().ode;
                let path = integrate_period_in(prob, self.lambda_flux, self.rho0, at, &ode, self.direction)?;
                if path.samples.len() != at.len() {
                    return Err(Error::NoBracket { lambda_flux: self.lambda_flux });
                }
                Ok(path.samples)
            }
            SolverKind::Analytic => Ok(vec![self.rho0; at.len()]),
            SolverKind::FiniteVolume => Ok(at.iter().map(|y| self.density_at(*y)).collect()),
        }
    }

    /// Flux `q` at cell centers from the stored pressure gradient.
    pub fn cell_flux(&self, prob: &ReynoldsProblem) -> Vec<f64> {
        (0..self.grid.n)
            .map(|i| {
                let h = prob.gap.h(self.grid.center(i));
                -h * h * h / (12.0 * prob.mu) * self.dpdy[i] + prob.s * h / 2.0
            })
            .collect()
    }
}

/// Eighth-order central difference on a periodic grid.
fn periodic_derivative(f: &[f64], dy: f64) -> Vec<f64> {
    const C: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    let n = f.len() as isize;
    let at = |i: isize| f[i.rem_euclid(n) as usize];
    (0..n)
        .map(|i| {
            let mut d = 0.0;
            for (k, c) in C.iter().enumerate() {
                let k = k as isize + 1;
                d += c * (at(i + k) - at(i - k));
            }
            d / dy
        })
        .collect()
}

fn mass_of(prob: &ReynoldsProblem, lambda_flux: f64, opts: &ShootingOptions) -> Result<(f64, f64)> {
    let orbit = shoot_periodic(prob, lambda_flux, opts)?;
    let rho0 = orbit.rho0;
    let path = integrate_period_in(prob, lambda_flux, rho0, &[], &opts.ode, orbit.direction)?;
    if path.exit != Exit::Completed {
        return Err(Error::NoBracket { lambda_flux });
    }
    Ok((path.mass, rho0))
}

/// Solves the Reynolds problem by shooting and reports the solution at the
/// centers of an `n`-cell grid.
pub fn solve_reynolds(prob: &ReynoldsProblem, n: usize, opts: &ShootingOptions) -> Result<ReynoldsSolution> {
    let grid = Grid1D::new(n)?;
    if prob.s == 0.0 {
        let rho = prob.mean_density();
        return Ok(ReynoldsSolution::assemble(
            prob,
            grid,
            vec![rho; n],
            0.0,
            rho,
            rho * prob.gap.area(),
            0.0,
            SolverKind::Analytic,
            0,
        ));
    }
    let lam_min = prob.lambda_limit()?;
    let cap = prob.law.rho_bar * prob.gap.area();
    let target = prob.mass;
    let mut evals = 0usize;
    // mass(λ) − M. A failed shot near λ_min means the solution is pinned at
    // ρ̄; an unresolvable one near 0 means a dilute film with mass ≈ 2|λ|/s.
    // Both only steer the bracket: the result is checked for periodicity
    // and mass below.
    let mut g = |lam: f64| -> Result<f64> {
        evals += 1;
        match mass_of(prob, lam, opts) {
            Ok((m, _)) => Ok(m - target),
            Err(Error::NoBracket { .. } | Error::ShootingUnstable { .. }) if lam < 0.5 * lam_min => Ok(cap - target),
            Err(Error::ShootingUnstable { .. }) => Ok(-target),
            Err(e) => Err(e),
        }
    };

    let lam0 = opts.initial_lambda.unwrap_or_else(|| {
        let scale = prob.mean_density() / prob.law.rho_bar;
        lam_min * scale
    });
    if !(lam0 > lam_min && lam0 < 0.0) {
        return Err(Error::InvalidInput(alloc::format!(
            "initial lambda_flux {lam0} outside ({lam_min}, 0)"
        )));
    }
    let g0 = g(lam0)?;
    let mut bracket = None;
    let (mut a, mut ga) = (lam0, g0);
    for _ in 0..60 {
        if ga == 0.0 {
            bracket = Some((a, a, 0.0, 0.0));
            break;
        }
        // mass grows as λ decreases
        let b = if ga < 0.0 { lam_min + 0.5 * (a - lam_min) } else { 0.5 * a };
        let gb = g(b)?;
        if (gb > 0.0) != (ga > 0.0) || gb == 0.0 {
            bracket = Some((a, b, ga, gb));
            break;
        }
        a = b;
        ga = gb;
    }
    let (a, b, ga, gb) = match bracket {
        Some(br) => br,
        None => scan_bracket(&mut g, lam_min, target)?,
    };
    let lambda_flux = if a == b {
        a
    } else {
        brent(&mut g, a, b, ga, gb, 1e-15 * abs(lam_min), 200)?.x
    };
    let orbit = shoot_periodic(prob, lambda_flux, opts)?;
    let rho0 = orbit.rho0;
    let centers = grid.centers();
    let path = integrate_period_in(prob, lambda_flux, rho0, &centers, &opts.ode, orbit.direction)?;
    if path.exit != Exit::Completed {
        return Err(Error::NoBracket { lambda_flux });
    }
    let periodicity = abs(path.end_rho - rho0);
    if periodicity > opts.tol_shoot {
        return Err(Error::RootNotConverged {
            iterations: evals,
            residual: periodicity,
        });
    }
    if abs(path.mass - target) > opts.tol_mass.max(1e-14 * target) {
        return Err(Error::RootNotConverged {
            iterations: evals,
            residual: path.mass - target,
        });
    }
    let mut sol = ReynoldsSolution::assemble(
        prob,
        grid,
        path.samples,
        lambda_flux,
        rho0,
        path.mass,
        periodicity,
        SolverKind::Shooting,
        evals,
    );
    sol.direction = orbit.direction;
    Ok(sol)
}

/// Fallback bracket search over 64 flux constants, checking monotonicity.
fn scan_bracket<G: FnMut(f64) -> Result<f64>>(g: &mut G, lam_min: f64, target: f64) -> Result<(f64, f64, f64, f64)> {
    const N: usize = 64;
    let mut prev: Option<(f64, f64)> = None;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut found = None;
    for k in 1..N {
        let lam = lam_min * (1.0 - k as f64 / N as f64);
        let v = g(lam)?;
        lo = lo.min(v + target);
        hi = hi.max(v + target);
        if let Some((pl, pv)) = prev {
            if v > pv {
                return Err(Error::NonMonotone { lambda_flux: lam });
            }
            if found.is_none() && pv >= 0.0 && v <= 0.0 {
                found = Some((pl, lam, pv, v));
            }
        }
        prev = Some((lam, v));
    }
    found.ok_or(Error::BracketFailure {
        target,
        mass_lo: lo,
        mass_hi: hi,
    })
}

/// Newton settings for the finite-volume oracle.
#[derive(Debug, Clone, Copy)]
pub struct FvOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FvOptions {
    fn default() -> Self {
        Self { tol: 1e-11, max_iter: 100 }
    }
}

struct FvSystem<'a> {
    prob: &'a ReynoldsProblem,
    grid: Grid1D,
    hf: Vec<f64>,
    hc: Vec<f64>,
    gl: GaussLegendre,
    face_scale: f64,
}

impl<'a> FvSystem<'a> {
    fn new(prob: &'a ReynoldsProblem, n: usize) -> Result<Self> {
        let grid = Grid1D::new(n)?;
        let dy = grid.dy();
        let hf = (0..n).map(|i| prob.gap.h((i as f64 + 1.0) * dy)).collect();
        let hc = (0..n).map(|i| prob.gap.h(grid.center(i))).collect();
        let rm = prob.mean_density();
        let h = prob.gap.mean;
        let face_scale = prob.law.rho_bar * h * prob.s / 2.0
            + h * h * h * rm * prob.law.dpressure_raw(rm) / (12.0 * prob.mu);
        Ok(Self {
            prob,
            grid,
            hf,
            hc,
            gl: GaussLegendre::new(16),
            face_scale,
        })
    }

    fn f_diff(&self, a: f64, b: f64) -> f64 {
        let law = &self.prob.law;
        self.gl.integrate(|s| s * law.dpressure_raw(s), a, b)
    }

    /// Face density weights `(w_left, w_right)`.
    fn face_weights(&self, i: usize, rl: f64, rr: f64) -> (f64, f64) {
        let p = self.prob;
        if p.s == 0.0 {
            return (0.5, 0.5);
        }
        let h = self.hf[i];
        let rm = 0.5 * (rl + rr);
        let diff = h * h * h * rm * p.law.dpressure_raw(rm) / (12.0 * p.mu);
        let peclet = abs(p.s * h / 2.0) * self.grid.dy() / diff;
        if peclet <= 2.0 {
            (0.5, 0.5)
        } else if p.s > 0.0 {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        }
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let n = self.grid.n;
        let p = self.prob;
        let dy = self.grid.dy();
        let lam = x[n];
        let mut r = vec![0.0; n + 1];
        for i in 0..n {
            let j = (i + 1) % n;
            let (rl, rr) = (x[i], x[j]);
            let h = self.hf[i];
            let (wl, wr) = self.face_weights(i, rl, rr);
            let face = wl * rl + wr * rr;
            r[i] = (h * h * h / (12.0 * p.mu) * self.f_diff(rl, rr) / dy - face * h * p.s / 2.0 - lam) / self.face_scale;
        }
        r[n] = (dy * (0..n).map(|i| self.hc[i] * x[i]).sum::<f64>() - p.mass) / p.mass;
        r
    }

    fn jacobian(&self, x: &[f64]) -> DenseMatrix {
        let n = self.grid.n;
        let p = self.prob;
        let dy = self.grid.dy();
        let mut jac = DenseMatrix::zeros(n + 1);
        for i in 0..n {
            let j = (i + 1) % n;
            let (rl, rr) = (x[i], x[j]);
            let h = self.hf[i];
            let c = h * h * h / (12.0 * p.mu * dy);
            let (wl, wr) = self.face_weights(i, rl, rr);
            let adv = h * p.s / 2.0;
            jac.add(i, i, (-c * rl * p.law.dpressure_raw(rl) - wl * adv) / self.face_scale);
            jac.add(i, j, (c * rr * p.law.dpressure_raw(rr) - wr * adv) / self.face_scale);
            jac.add(i, n, -1.0 / self.face_scale);
        }
        for i in 0..n {
            jac.set(n, i, dy * self.hc[i] / p.mass);
        }
        jac
    }
}

/// Finite-volume Newton solution of the conservation form
/// `∂_y((h³/12μ) ∂_y f(ρ) − ρ h s / 2) = 0` with flux constant `λ`.
pub fn fv_solve(prob: &ReynoldsProblem, n: usize, opts: &FvOptions) -> Result<ReynoldsSolution> {
    if n < 16 {
        return Err(Error::InvalidInput(alloc::format!("fv_solve needs n >= 16, got {n}")));
    }
    let sys = FvSystem::new(prob, n)?;
    let rb = prob.law.rho_bar;
    let mut x = vec![prob.mean_density(); n + 1];
    x[n] = if prob.s == 0.0 {
        0.0
    } else {
        prob.lambda_limit()? * prob.mean_density() / rb
    };
    let mut r = sys.residual(&x);
    let mut norm = max_abs(&r);
    let mut it = 0;
    while norm > opts.tol {
        if it >= opts.max_iter {
            return Err(Error::NewtonNonconvergence { iterations: it, residual: norm });
        }
        it += 1;
        let jac = sys.jacobian(&x);
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let dx = jac.lu()?.solve(&neg);
        // keep densities strictly inside (0, ρ̄)
        let mut alpha: f64 = 1.0;
        for i in 0..n {
            if dx[i] < 0.0 {
                alpha = alpha.min(0.9 * x[i] / -dx[i]);
            } else if dx[i] > 0.0 {
                alpha = alpha.min(0.9 * (rb - x[i]) / dx[i]);
            }
        }
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + alpha * d).collect();
            let rt = sys.residual(&trial);
            let nt = max_abs(&rt);
            if nt < norm || nt <= opts.tol {
                x = trial;
                r = rt;
                norm = nt;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonNonconvergence { iterations: it, residual: norm });
        }
    }
    let lam = x[n];
    let rho: Vec<f64> = x[..n].to_vec();
    let mass = sys.grid.dy() * (0..n).map(|i| sys.hc[i] * rho[i]).sum::<f64>();
    let rho0 = sys.grid.interpolate(&rho, 0.0);
    Ok(ReynoldsSolution::assemble(
        prob,
        sys.grid,
        rho,
        lam,
        rho0,
        mass,
        0.0,
        SolverKind::FiniteVolume,
        it,
    ))
}

/// Horizontal velocity `v(y, Z)` of the Poiseuille–Couette profile.
pub fn velocity_profile(prob: &ReynoldsProblem, sol: &ReynoldsSolution, y: f64, z: f64) -> Result<f64> {
    let h = prob.gap.h(y);
    if !(z >= 0.0 && z <= h) {
        return Err(Error::Domain {
            quantity: "Z",
            value: z,
            lower: 0.0,
            upper: h,
        });
    }
    let dp = prob.pressure_gradient(y, sol.density_at(y), sol.lambda_flux);
    Ok(dp / (2.0 * prob.mu) * (z * z - z * h) + prob.s * (1.0 - z / h))
}

/// `∂_Z v(y, Z)`.
pub fn velocity_shear(prob: &ReynoldsProblem, y: f64, rho: f64, lambda_flux: f64, z: f64) -> f64 {
    let h = prob.gap.h(y);
    let dp = prob.pressure_gradient(y, rho, lambda_flux);
    dp / (2.0 * prob.mu) * (2.0 * z - h) - prob.s / h
}

/// Volumetric flux `q(y) = −h³ ∂_y p / 12μ + s h / 2`.
pub fn flux(prob: &ReynoldsProblem, sol: &ReynoldsSolution, y: f64) -> f64 {
    let h = prob.gap.h(y);
    let dp = prob.pressure_gradient(y, sol.density_at(y), sol.lambda_flux);
    -h * h * h / (12.0 * prob.mu) * dp + prob.s * h / 2.0
}

/// Observed order from three successive refinements `coarse, mid, fine`.
pub fn observed_order(coarse: f64, mid: f64, fine: f64) -> f64 {
    log2(abs(coarse - mid) / abs(mid - fine))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_problem() -> ReynoldsProblem {
        ReynoldsProblem::new(GapProfile::constant(1.0).unwrap(), 1.0, 2.0, 0.5, PressureLaw::hard_sphere()).unwrap()
    }

    fn cosine_problem() -> ReynoldsProblem {
        let gap = GapProfile::cosine(1.0, alloc::vec![0.5]).unwrap();
        ReynoldsProblem::new(gap, 1.0, 1.0, 0.4, PressureLaw::hard_sphere()).unwrap()
    }

    #[test]
    fn rhs_examples() {
        let p = constant_problem();
        assert_eq!(p.ode_rhs(0.3, 0.5, -0.5).unwrap(), 0.0);
        assert!(p.ode_rhs(0.3, 1.0, -0.5).is_err());
        let gap = GapProfile::constant(2.0).unwrap();
        let q = ReynoldsProblem::new(gap, 1.0, 1.0, 0.5, PressureLaw::hard_sphere()).unwrap();
        // (6/4 − 1.2/(8·0.4)) · (1 − 0.4)² = 1.125 · 0.36
        assert!((q.ode_rhs(0.0, 0.4, -0.1).unwrap() - 0.405).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_and_bound_exits() {
        let p = constant_problem();
        let ode = ShootingOptions::default().ode;
        let path = integrate_period(&p, -0.5, 0.5, &[0.25, 0.5], &ode).unwrap();
        assert_eq!(path.exit, Exit::Completed);
        assert!(path.samples.iter().all(|r| (r - 0.5).abs() < 1e-14));
        let up = integrate_period(&p, -1e-3, 0.999, &[], &ode).unwrap();
        assert!(up.defect_sign(0.999) > 0);
        let down = integrate_period(&p, -0.99, 1e-3, &[], &ode).unwrap();
        assert!(matches!(down.exit, Exit::HitFloor { .. }));
    }

    #[test]
    fn constant_gap_shooting() {
        let p = constant_problem();
        let opts = ShootingOptions::default();
        let orbit = shoot_periodic(&p, -0.3, &opts).unwrap();
        assert!((orbit.rho0 - 0.3).abs() < 1e-12);
        let sol = solve_reynolds(&p, 32, &opts).unwrap();
        assert!((sol.lambda_flux + 0.5).abs() < 1e-10);
        assert!(sol.rho.iter().all(|r| (r - 0.5).abs() < 1e-10));
    }

    #[test]
    fn rest_state() {
        let gap = GapProfile::cosine(1.0, alloc::vec![0.3]).unwrap();
        let p = ReynoldsProblem::new(gap, 1.0, 0.0, 0.3, PressureLaw::hard_sphere()).unwrap();
        let sol = solve_reynolds(&p, 16, &ShootingOptions::default()).unwrap();
        assert_eq!(sol.lambda_flux, 0.0);
        assert!(sol.rho.iter().all(|r| (r - 0.3).abs() < 1e-15));
        let fv = fv_solve(&p, 16, &FvOptions::default()).unwrap();
        assert!(fv.rho.iter().all(|r| (r - 0.3).abs() < 1e-12));
    }

    #[test]
    fn fv_constant_gap_exact() {
        let fv = fv_solve(&constant_problem(), 32, &FvOptions::default()).unwrap();
        assert!((fv.lambda_flux + 0.5).abs() < 1e-10);
        assert!(fv.rho.iter().all(|r| (r - 0.5).abs() < 1e-10));
    }

    #[test]
    fn cosine_shooting_matches_fv() {
        let p = cosine_problem();
        let sh = solve_reynolds(&p, 128, &ShootingOptions::default()).unwrap();
        let fv = fv_solve(&p, 128, &FvOptions::default()).unwrap();
        assert!(sh.lambda_flux < 0.0);
        let d = sh.rho.iter().zip(&fv.rho).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(d < 1e-3, "max difference {d}");
        assert!(sh.residuals.mass < 1e-10);
    }

    #[test]
    fn velocity_boundary_values() {
        let p = cosine_problem();
        let sol = solve_reynolds(&p, 64, &ShootingOptions::default()).unwrap();
        let y = 0.3;
        assert!((velocity_profile(&p, &sol, y, 0.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(velocity_profile(&p, &sol, y, p.gap.h(y)).unwrap().abs() < 1e-14);
        let q = flux(&p, &sol, y);
        assert!((sol.density_at(y) * q + sol.lambda_flux).abs() < 1e-12);
    }
}
