use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lubrix::report::Diagnostic;
use lubrix::{dispatch, load_config, Command, RunConfig, RunError};

#[derive(Parser)]
#[command(name = "lubrix", version, about = "Compressible lubrication solvers")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `out_dir` of the configuration.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Overrides `checks.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `checks.samples`.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Worker threads of the sweep (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    group: Group,
}

#[derive(Subcommand)]
enum Group {
    /// Reduced Reynolds problem.
    #[command(subcommand)]
    Reynolds(ReynoldsCmd),
    /// Compressible thin-film problem.
    #[command(subcommand)]
    Thinfilm(ThinFilmCmd),
    /// Functional-inequality checks.
    #[command(subcommand)]
    Check(CheckCmd),
    /// Pressure-law checks.
    #[command(subcommand)]
    Eos(EosCmd),
}

#[derive(Subcommand)]
enum ReynoldsCmd {
    /// Shooting solve; writes reynolds.csv and reynolds.json.
    Solve,
    /// Shooting against the finite-volume oracle; writes oracle.json.
    OracleCompare,
}

#[derive(Subcommand)]
enum ThinFilmCmd {
    /// One thin-film solve at `thinfilm.eps`.
    Solve,
    /// All of `thinfilm.eps_list` against the Reynolds limit.
    Sweep,
}

#[derive(Subcommand)]
enum CheckCmd {
    /// Inequality, divergence and extension checks on seeded samples.
    Inequalities,
}

#[derive(Subcommand)]
enum EosCmd {
    /// Renormalization identity over random densities.
    Identities,
}

fn command(g: &Group) -> Command {
    match g {
        Group::Reynolds(ReynoldsCmd::Solve) => Command::ReynoldsSolve,
        Group::Reynolds(ReynoldsCmd::OracleCompare) => Command::ReynoldsOracleCompare,
        Group::Thinfilm(ThinFilmCmd::Solve) => Command::ThinFilmSolve,
        Group::Thinfilm(ThinFilmCmd::Sweep) => Command::ThinFilmSweep,
        Group::Check(CheckCmd::Inequalities) => Command::CheckInequalities,
        Group::Eos(EosCmd::Identities) => Command::EosIdentities,
    }
}

fn configure(cli: &Cli) -> Result<RunConfig, RunError> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Some(s) = cli.seed {
        cfg.checks.seed = s;
    }
    if let Some(n) = cli.samples {
        cfg.checks.samples = n;
    }
    let v = cfg.violations();
    if !v.is_empty() {
        return Err(lubrix::ConfigError::Invalid(v).into());
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LUBRIX_LOG", "warn")).init();
    let cli = Cli::parse();
    let cmd = command(&cli.group);
    let cfg = match configure(&cli) {
        Ok(c) => c,
        Err(e) => {
            let d = Diagnostic { kind: e.kind().into(), message: e.to_string(), exit_code: e.exit_code() };
            eprintln!("{}", serde_json::to_string(&d).expect("diagnostic serializes"));
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let out = dispatch(cmd, &cfg, cli.threads);
    if let Some(d) = &out.report.diagnostic {
        eprintln!("{}", serde_json::to_string(d).expect("diagnostic serializes"));
    }
    println!("{}", cfg.out_dir.join(cmd.artifact()).display());
    ExitCode::from(out.exit_code as u8)
}
