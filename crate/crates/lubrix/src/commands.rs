//! The six commands. Each writes its artifacts into the output directory
//! and fills a [`SolverReport`]; [`dispatch`] turns failures into
//! diagnostics and exit codes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use lubrix_core::divfree::{
    corrected_extension_with, extension_defects, inequality_check, BogovskiiSolver, ExtensionSpec, InequalityKind, WallTrace,
};
use lubrix_core::domain::GridQ;
use lubrix_core::eos::{PressureLaw, RegularizedEos};
use lubrix_core::reynolds::{fv_solve, observed_order, solve_reynolds, FvOptions};
use lubrix_core::thinfilm::{
    mass_drift, reynolds_reference, state_residual, sweep_case, SweepCase, ThinFilmProblem, ThinFilmState,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::report::{write_csv, Diagnostic, SolverReport, Status};
use crate::sampling::{random_densities, random_field, random_source};
use crate::{RunError, EXIT_OK};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    ReynoldsSolve,
    ReynoldsOracleCompare,
    ThinFilmSolve,
    ThinFilmSweep,
    CheckInequalities,
    EosIdentities,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::ReynoldsSolve => "reynolds solve",
            Command::ReynoldsOracleCompare => "reynolds oracle-compare",
            Command::ThinFilmSolve => "thinfilm solve",
            Command::ThinFilmSweep => "thinfilm sweep",
            Command::CheckInequalities => "check inequalities",
            Command::EosIdentities => "eos identities",
        }
    }

    /// JSON artifact written by every run, failed or not.
    pub fn artifact(&self) -> &'static str {
        match self {
            Command::ReynoldsSolve => "reynolds.json",
            Command::ReynoldsOracleCompare => "oracle.json",
            Command::ThinFilmSolve => "thinfilm.json",
            Command::ThinFilmSweep => "sweep.json",
            Command::CheckInequalities => "checks.json",
            Command::EosIdentities => "eos.json",
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub report: SolverReport,
    pub exit_code: i32,
}

/// Runs `cmd` and writes its JSON report. `threads` sizes the sweep pool
/// (`None`: one per core).
pub fn dispatch(cmd: Command, cfg: &RunConfig, threads: Option<usize>) -> Outcome {
    let mut report = SolverReport::new(cmd.name(), &cfg.hash());
    let start = Instant::now();
    let out = cfg.out_dir.as_path();
    let result = fs::create_dir_all(out).map_err(RunError::from).and_then(|_| match cmd {
        Command::ReynoldsSolve => reynolds_solve(cfg, out, &mut report),
        Command::ReynoldsOracleCompare => oracle_compare(cfg, &mut report),
        Command::ThinFilmSolve => thinfilm_solve(cfg, out, &mut report),
        Command::ThinFilmSweep => thinfilm_sweep(cfg, out, threads, &mut report),
        Command::CheckInequalities => check_inequalities(cfg, &mut report),
        Command::EosIdentities => eos_identities(cfg, &mut report),
    });
    report.wall_time_s.insert("total".into(), start.elapsed().as_secs_f64());
    let mut exit_code = EXIT_OK;
    if let Err(e) = result {
        exit_code = e.exit_code();
        report.status = Status::SolverFailure;
        report.diagnostic = Some(Diagnostic {
            kind: e.kind().into(),
            message: e.to_string(),
            exit_code,
        });
    }
    if let Err(e) = report.write(&out.join(cmd.artifact())) {
        warn!("cannot write {}: {e}", cmd.artifact());
        if exit_code == EXIT_OK {
            exit_code = crate::EXIT_SOLVER;
            report.status = Status::SolverFailure;
            report.diagnostic = Some(Diagnostic {
                kind: "io".into(),
                message: e.to_string(),
                exit_code,
            });
        }
    }
    Outcome { report, exit_code }
}

fn timed<T>(report: &mut SolverReport, key: &str, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let v = f();
    report.wall_time_s.insert(key.into(), t.elapsed().as_secs_f64());
    v
}

fn reynolds_solve(cfg: &RunConfig, out: &Path, report: &mut SolverReport) -> Result<(), RunError> {
    let prob = cfg.reynolds_problem()?;
    let sol = timed(report, "solve", || solve_reynolds(&prob, cfg.reynolds.n, &cfg.shooting_options()))?;
    info!("reynolds: lambda_flux = {}", sol.lambda_flux);
    let q = sol.cell_flux(&prob);
    let rows = (0..sol.grid.n).map(|i| {
        let y = sol.grid.center(i);
        vec![y, prob.gap.h(y), sol.rho[i], sol.p[i], sol.dpdy[i], q[i]]
    });
    write_csv(&out.join("reynolds.csv"), &report.config_hash, &["y", "h", "rho", "p", "dpdy", "flux"], rows)?;
    let r = &sol.residuals;
    report.residuals = BTreeMap::from([
        ("first_integral".into(), r.first_integral),
        ("periodicity".into(), r.periodicity),
        ("mass".into(), r.mass),
    ]);
    report.metrics = json!({
        "lambda_flux": sol.lambda_flux,
        "rho0": sol.rho0,
        "mass": sol.mass,
        "rho_min": sol.rho.iter().cloned().fold(f64::INFINITY, f64::min),
        "rho_max": sol.rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        "n": sol.grid.n,
        "solver": sol.solver.as_str(),
        "iterations": sol.iterations,
    });
    Ok(())
}

fn oracle_compare(cfg: &RunConfig, report: &mut SolverReport) -> Result<(), RunError> {
    let prob = cfg.reynolds_problem()?;
    let n = cfg.reynolds.fv_n;
    let shoot = timed(report, "shooting", || solve_reynolds(&prob, n, &cfg.shooting_options()))?;
    let fv_opts = FvOptions { tol: cfg.reynolds.fv_tol, ..FvOptions::default() };
    let fvs = timed(report, "fv", || {
        [n / 4, n / 2, n].iter().map(|&m| fv_solve(&prob, m, &fv_opts)).collect::<Result<Vec<_>, _>>()
    })?;
    let fine = &fvs[2];
    let diff = shoot.rho.iter().zip(&fine.rho).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let lambdas: Vec<f64> = fvs.iter().map(|s| s.lambda_flux).collect();
    let order = observed_order(lambdas[0], lambdas[1], lambdas[2]);
    info!("oracle: |rho_shoot - rho_fv| = {diff:e}, order {order:.3}");
    report.residuals = BTreeMap::from([
        ("density_difference".into(), diff),
        ("lambda_difference".into(), (shoot.lambda_flux - fine.lambda_flux).abs()),
        ("fv_mass".into(), fine.residuals.mass),
    ]);
    report.metrics = json!({
        "n": n,
        "fv_grids": [n / 4, n / 2, n],
        "fv_lambda_flux": lambdas,
        "shooting_lambda_flux": shoot.lambda_flux,
        "observed_order": order,
        "fv_iterations": fvs.iter().map(|s| s.iterations).collect::<Vec<_>>(),
    });
    Ok(())
}

fn thinfilm_csv(out: &Path, hash: &str, state: &ThinFilmState, prob: &ThinFilmProblem) -> Result<(), RunError> {
    let g = &state.grid;
    let reg = prob.regularized(g, 1.0)?;
    let v = state.vertical_velocity();
    let mut rows = Vec::with_capacity(g.nx * g.nz);
    for i in 0..g.nx {
        for j in 0..g.nz {
            let rho = state.rho.at(i, j);
            let u = 0.5 * (state.uh.at(g.left(i), j) + state.uh.at(i, j));
            let vc = 0.5 * (v.at(i, j) + v.at(i, j + 1));
            rows.push(vec![g.yc(i), g.zc(j), rho, u, vc, reg.truncated_pressure(rho)?]);
        }
    }
    let name = format!("thinfilm_eps{}.csv", g.eps);
    write_csv(&out.join(name), hash, &["y", "zeta", "rho", "uh", "V", "p"], rows)?;
    Ok(())
}

fn state_metrics(state: &ThinFilmState, prob: &ThinFilmProblem) -> Result<Value, RunError> {
    Ok(json!({
        "eps": prob.eps,
        "delta": state.delta,
        "residual": state_residual(state, prob, state.delta)?,
        "mass_drift": mass_drift(state, prob.mass),
        "iterations": state.residual_history.len(),
        "nx": state.grid.nx,
        "nz": state.grid.nz,
    }))
}

fn estimate_json(r: &lubrix_core::thinfilm::EstimateReport) -> Value {
    json!({
        "energy_lhs": r.energy_lhs,
        "energy_rhs": r.energy_rhs,
        "energy_constant": r.energy_constant,
        "layer_width": r.layer_width,
        "pressure_mean": r.pressure_mean,
        "pressure_l2": r.pressure_l2,
        "vertical_pressure_variation": r.vertical_pressure_variation,
        "renormalized_residual": r.renormalized_residual,
    })
}

fn thinfilm_solve(cfg: &RunConfig, out: &Path, report: &mut SolverReport) -> Result<(), RunError> {
    let prob = cfg.thinfilm_problem(cfg.thinfilm.eps)?;
    let opts = cfg.thinfilm_options();
    let res = timed(report, "solve", || lubrix_core::thinfilm::solve_thinfilm(&prob, &opts));
    match res {
        Ok(sol) => {
            thinfilm_csv(out, &report.config_hash, &sol.state, &prob)?;
            let mut m = state_metrics(&sol.state, &prob)?;
            m["estimates"] = estimate_json(&sol.report);
            report.residuals.insert("residual".into(), m["residual"].as_f64().unwrap_or(f64::NAN));
            report.residuals.insert("mass_drift".into(), mass_drift(&sol.state, prob.mass));
            report.metrics = m;
            Ok(())
        }
        Err(fail) => {
            // keep the last converged stage on disk
            if let Some(state) = &fail.last_converged {
                thinfilm_csv(out, &report.config_hash, state, &prob)?;
                report.metrics = json!({ "last_converged": state_metrics(state, &prob)? });
            }
            Err(fail.error.into())
        }
    }
}

fn case_json(eps: f64, case: &SweepCase) -> Value {
    json!({
        "eps": eps,
        "status": "ok",
        "vertical_variation": case.metrics.vertical_variation,
        "pressure_distance": case.metrics.pressure_distance,
        "shear_distance": case.metrics.shear_distance,
        "delta": case.delta,
        "residual": case.residual,
        "iterations": case.iterations,
        "mass_drift": case.mass_drift,
        "estimates": estimate_json(&case.report),
    })
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn thinfilm_sweep(cfg: &RunConfig, out: &Path, threads: Option<usize>, report: &mut SolverReport) -> Result<(), RunError> {
    let eps_list = cfg.thinfilm.eps_list.clone();
    let template = cfg.thinfilm_problem(eps_list[0])?;
    let opts = cfg.thinfilm_options();
    let (rp, rs) = timed(report, "reynolds", || reynolds_reference(&template, opts.nx))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| RunError::Check { kind: "thread_pool", message: e.to_string() })?;
    let rows: Vec<_> = timed(report, "sweep", || {
        pool.install(|| eps_list.par_iter().map(|&eps| (eps, sweep_case(&template, eps, &opts, &rp, &rs))).collect())
    });

    let mut json_rows = Vec::new();
    let mut csv_rows = Vec::new();
    let mut failed = Vec::new();
    for (eps, outcome) in &rows {
        match outcome {
            Ok(case) => {
                info!("eps {eps}: variation {:.3e}, distance {:.3e}", case.metrics.vertical_variation, case.metrics.pressure_distance);
                json_rows.push(case_json(*eps, case));
                let m = &case.metrics;
                csv_rows.push(vec![*eps, m.vertical_variation, m.pressure_distance, m.shear_distance, case.residual, case.mass_drift]);
                let prob = template.with_eps(*eps)?;
                thinfilm_csv(out, &report.config_hash, &case.state, &prob)?;
            }
            Err(e) => {
                warn!("eps {eps}: {e}");
                json_rows.push(json!({ "eps": eps, "status": "failed", "kind": e.kind(), "message": e.to_string() }));
                failed.push(*eps);
            }
        }
    }
    write_csv(
        &out.join("sweep.csv"),
        &report.config_hash,
        &["eps", "vertical_variation", "pressure_distance", "shear_distance", "residual", "mass_drift"],
        csv_rows.iter().cloned(),
    )?;
    let col = |k: usize| csv_rows.iter().map(|r| r[k]).collect::<Vec<_>>();
    let complete = failed.is_empty();
    report.residuals.insert("max_mass_drift".into(), col(5).into_iter().fold(0.0, f64::max));
    report.residuals.insert("max_residual".into(), col(4).into_iter().fold(0.0, f64::max));
    report.metrics = json!({
        "rows": json_rows,
        "reynolds_lambda_flux": rs.lambda_flux,
        "vertical_variation_decreasing": complete && strictly_decreasing(&col(1)),
        "pressure_distance_decreasing": complete && strictly_decreasing(&col(2)),
        "shear_distance_decreasing": complete && strictly_decreasing(&col(3)),
    });
    if complete {
        Ok(())
    } else {
        Err(RunError::Check {
            kind: "sweep_partial",
            message: format!("{} of {} eps values failed: {failed:?}", failed.len(), rows.len()),
        })
    }
}

#[derive(Default)]
struct Stats {
    min: f64,
    max: f64,
    sum: f64,
    n: usize,
}

impl Stats {
    fn push(&mut self, v: f64) {
        if self.n == 0 {
            self.min = v;
            self.max = v;
        }
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        self.sum += v;
        self.n += 1;
    }

    fn json(&self) -> Value {
        let mean = if self.n > 0 { self.sum / self.n as f64 } else { f64::NAN };
        json!({ "min": self.min, "max": self.max, "mean": mean, "count": self.n })
    }
}

fn check_inequalities(cfg: &RunConfig, report: &mut SolverReport) -> Result<(), RunError> {
    let c = &cfg.checks;
    let dom = cfg.check_domain()?;
    let mut kinds = serde_json::Map::new();
    let mut exceedances = Vec::new();
    timed(report, "inequalities", || -> Result<(), RunError> {
        for kind in [InequalityKind::Anisotropic, InequalityKind::Poincare, InequalityKind::Korn] {
            let bound = match kind {
                InequalityKind::Anisotropic => Some(1.0 + 1e-8),
                InequalityKind::Poincare => Some(1.0),
                InequalityKind::Korn => None,
            };
            let mut st = Stats::default();
            let mut over = Vec::new();
            for k in 0..c.samples {
                let field = random_field(c.seed, k, kind);
                let r = inequality_check(kind, &field, &dom)?;
                st.push(r.ratio);
                if bound.is_some_and(|b| r.ratio > b) {
                    over.push(json!({ "seed": c.seed + k as u64, "ratio": r.ratio }));
                }
            }
            let mut entry = st.json();
            entry["bound"] = json!(bound);
            entry["exceedances"] = json!(over);
            if !over.is_empty() {
                exceedances.push(kind.as_str());
            }
            kinds.insert(kind.as_str().into(), entry);
        }
        Ok(())
    })?;

    let grid = GridQ::new(&dom.gap, c.nx, c.nz, c.eps)?;
    let solver = timed(report, "factorization", || BogovskiiSolver::new(&grid))?;
    let (mut res, mut stab, mut wall) = (Stats::default(), Stats::default(), 0.0_f64);
    timed(report, "bogovskii", || -> Result<(), RunError> {
        for k in 0..c.samples {
            let b = solver.solve(&random_source(c.seed, k, &grid))?;
            res.push(b.residual);
            stab.push(b.stability);
            wall = wall.max(b.field.wall_normal_trace());
            for v in b.field.u_bottom.iter().chain(&b.field.u_top) {
                wall = wall.max(v.abs());
            }
        }
        Ok(())
    })?;
    report.residuals.insert("bogovskii".into(), res.max);
    report.residuals.insert("bogovskii_trace".into(), wall);

    let trace = WallTrace::Fourier { mean: cfg.physics.s, cos: vec![], sin: vec![0.3 * cfg.physics.s] };
    let mut ext = Vec::new();
    let mut worst_div = 0.0_f64;
    let mut norms = Vec::new();
    timed(report, "extensions", || -> Result<(), RunError> {
        for &eta in &c.etas {
            let spec = ExtensionSpec { trace: trace.clone(), eta };
            let f = corrected_extension_with(&spec, &solver)?;
            let (div, tr) = extension_defects(&f, &grid, &trace);
            worst_div = worst_div.max(div);
            let l4 = f.lq_norm(&grid, 4.0);
            norms.push(l4);
            ext.push(json!({ "eta": eta, "divergence": div, "trace_error": tr, "l4_norm": l4 }));
        }
        Ok(())
    })?;
    report.residuals.insert("extension_divergence".into(), worst_div);
    let mut sorted: Vec<(f64, f64)> = c.etas.iter().cloned().zip(norms).collect();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let l4: Vec<f64> = sorted.iter().map(|p| p.1).collect();

    report.metrics = json!({
        "samples": c.samples,
        "seed": c.seed,
        "inequalities": kinds,
        "bogovskii": { "residual": res.json(), "stability": stab.json(), "wall_trace": wall },
        "extensions": ext,
        "l4_decreasing_in_eta": strictly_decreasing(&l4),
    });
    if exceedances.is_empty() {
        Ok(())
    } else {
        Err(RunError::Check {
            kind: "inequality_exceeded",
            message: format!("bound exceeded for {exceedances:?}; seeds listed under metrics.inequalities"),
        })
    }
}

/// Samples of the renormalization identity per family.
pub const EOS_SAMPLES: usize = 1000;

fn eos_identities(cfg: &RunConfig, report: &mut SolverReport) -> Result<(), RunError> {
    let e = &cfg.eos;
    let families = [
        ("rational", PressureLaw::rational(e.rho_bar, e.a, e.gamma, e.theta)?),
        ("log", PressureLaw::log(e.rho_bar, e.a, e.theta)?),
    ];
    let mean = cfg.physics.mass / cfg.gap_profile()?.area();
    let truncation = cfg.thinfilm.truncation.unwrap_or(1e3 / e.rho_bar);
    let deltas = [cfg.thinfilm.delta_start, cfg.thinfilm.delta_min];
    let mut per = serde_json::Map::new();
    let mut worst = 0.0_f64;
    timed(report, "identities", || -> Result<(), RunError> {
        for (f, (name, law)) in families.iter().enumerate() {
            let mut max = 0.0_f64;
            for (d, &delta) in deltas.iter().enumerate() {
                let reg = RegularizedEos::new(*law, truncation, delta, mean)?;
                for rho in random_densities(cfg.checks.seed, 2 * f + d, EOS_SAMPLES, law.rho_bar + 1.0) {
                    max = max.max(reg.renormalization_residual(rho)?.abs());
                }
            }
            worst = worst.max(max);
            per.insert((*name).into(), json!({ "max_residual": max, "samples": EOS_SAMPLES * deltas.len() }));
        }
        Ok(())
    })?;
    report.residuals.insert("renormalization".into(), worst);
    report.metrics = json!({ "families": per, "deltas": deltas, "truncation": truncation, "rho_m": mean });
    Ok(())
}
