use std::path::Path;
use std::process::Command;

use lubrix::{csv_config_hash, parse_config, SolverReport, Status};

fn run(dir: &Path, config: &str, args: &[&str]) -> (i32, String) {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lubrix"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn report(dir: &Path, name: &str) -> SolverReport {
    SolverReport::read(&dir.join("out").join(name)).unwrap()
}

#[test]
fn constant_gap_reynolds_solve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[physics]\ns = 2.0\nmass = 0.5\n";
    let (code, err) = run(dir.path(), cfg, &["reynolds", "solve"]);
    assert_eq!(code, 0, "{err}");
    let r = report(dir.path(), "reynolds.json");
    assert_eq!(r.status, Status::Ok);
    assert!((r.metrics["lambda_flux"].as_f64().unwrap() + 0.5).abs() < 1e-10);
    let mut expected = parse_config(cfg).unwrap();
    expected.out_dir = dir.path().join("out");
    assert_eq!(r.config_hash, expected.hash());
    let csv_path = dir.path().join("out/reynolds.csv");
    assert_eq!(csv_config_hash(&csv_path).unwrap(), Some(expected.hash()));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "y,h,rho,p,dpdy,flux");
    assert_eq!(csv.lines().count(), 1026);
}

#[test]
fn partial_sweep_keeps_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[gap]\ncos = [0.5]\n[thinfilm]\nnx = 16\nnz = 8\neps_list = [0.2, 0.1, 0.001]\ndelta_min = 0.01\n";
    let (code, err) = run(dir.path(), cfg, &["--threads", "2", "thinfilm", "sweep"]);
    assert_eq!(code, 2, "{err}");
    let r = report(dir.path(), "sweep.json");
    assert_eq!(r.status, Status::SolverFailure);
    assert_eq!(r.diagnostic.unwrap().kind, "sweep_partial");
    let rows = r.metrics["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["status"], "ok");
    assert_eq!(rows[2]["status"], "failed");
    assert_eq!(rows[2]["kind"], "continuation_stall");
    assert!(dir.path().join("out/thinfilm_eps0.1.csv").exists());
}

#[test]
fn eos_identities_hold() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run(dir.path(), "", &["eos", "identities"]);
    assert_eq!(code, 0, "{err}");
    let r = report(dir.path(), "eos.json");
    assert!(r.residuals["renormalization"] < 1e-8);
}

#[test]
fn invalid_config_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run(dir.path(), "[physics]\nmass = 1.2\n", &["reynolds", "solve"]);
    assert_eq!(code, 3);
    assert!(err.contains("physics.mass") && err.contains("rho_bar"), "{err}");
    let (code, err) = run(dir.path(), "[thinfilm]\nnxx = 3\n", &["reynolds", "solve"]);
    assert_eq!(code, 3);
    assert!(err.contains("nxx"), "{err}");
}

#[test]
fn seeded_checks_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[checks]\nsamples = 4\nnx = 8\nnz = 8\n";
    let mut metrics = Vec::new();
    for _ in 0..2 {
        let (code, err) = run(dir.path(), cfg, &["--seed", "7", "check", "inequalities"]);
        assert_eq!(code, 0, "{err}");
        let r = report(dir.path(), "checks.json");
        assert_eq!(r.metrics["seed"], 7);
        metrics.push(serde_json::to_string(&r.metrics).unwrap());
    }
    assert_eq!(metrics[0], metrics[1]);
}
