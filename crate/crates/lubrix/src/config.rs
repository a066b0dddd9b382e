//! Run configuration: TOML in, validated and hashed.

use std::fmt;
use std::path::{Path, PathBuf};

use lubrix_core::divfree::CheckDomain;
use lubrix_core::domain::GapProfile;
use lubrix_core::eos::{PressureFamily, PressureLaw};
use lubrix_core::reynolds::{ReynoldsProblem, ShootingOptions};
use lubrix_core::thinfilm::{ThinFilmOptions, ThinFilmProblem};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Largest thin-film grid accepted.
pub const MAX_NX: usize = 128;
pub const MAX_NZ: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    HardSphere,
    Rational,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EosSection {
    pub family: Family,
    pub rho_bar: f64,
    pub theta: f64,
    /// Amplitude `a` of the law.
    pub a: f64,
    /// Exponent `γ` of the rational law.
    pub gamma: f64,
}

impl Default for EosSection {
    fn default() -> Self {
        Self { family: Family::HardSphere, rho_bar: 1.0, theta: 1.0, a: 1.0, gamma: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GapSection {
    pub mean: f64,
    /// Coefficients of `cos 2πky`, `k = 1, 2, …`.
    pub cos: Vec<f64>,
}

impl Default for GapSection {
    fn default() -> Self {
        Self { mean: 1.0, cos: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsSection {
    pub mu: f64,
    pub lambda_visc: f64,
    pub s: f64,
    /// Total mass `∫ h ρ dy`.
    pub mass: f64,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        Self { mu: 1.0, lambda_visc: 1.0, s: 1.0, mass: 0.4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReynoldsSection {
    pub n: usize,
    pub tol_shoot: f64,
    pub tol_mass: f64,
    /// Finest finite-volume grid of the oracle comparison; `n/4` and `n/2`
    /// are solved as well.
    pub fv_n: usize,
    pub fv_tol: f64,
}

impl Default for ReynoldsSection {
    fn default() -> Self {
        Self { n: 1024, tol_shoot: 1e-10, tol_mass: 1e-10, fv_n: 512, fv_tol: 1e-11 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThinFilmSection {
    pub nx: usize,
    pub nz: usize,
    /// `ε` of `thinfilm solve`.
    pub eps: f64,
    /// Strictly decreasing `ε` values of `thinfilm sweep`.
    pub eps_list: Vec<f64>,
    pub delta_start: f64,
    pub delta_factor: f64,
    pub delta_min: f64,
    /// Truncation level `R`; defaults to `10³/ρ̄`.
    pub truncation: Option<f64>,
    pub relaxation: f64,
    pub picard_sweeps: usize,
    pub newton_tol: f64,
    pub max_newton: usize,
}

impl Default for ThinFilmSection {
    fn default() -> Self {
        let d = ThinFilmOptions::default();
        Self {
            nx: d.nx,
            nz: d.nz,
            eps: 0.1,
            eps_list: vec![0.2, 0.1, 0.05],
            delta_start: d.delta_start,
            delta_factor: d.delta_factor,
            delta_min: d.delta_min,
            truncation: None,
            relaxation: d.relaxation,
            picard_sweeps: d.picard_sweeps,
            newton_tol: d.newton_tol,
            max_newton: d.max_newton,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksSection {
    /// Random fields per inequality and random sources for the divergence solver.
    pub samples: usize,
    pub seed: u64,
    /// `ε` of the thin-domain inequalities.
    pub eps: f64,
    /// Layer widths of the extension study.
    pub etas: Vec<f64>,
    /// Grid of the divergence and extension checks.
    pub nx: usize,
    pub nz: usize,
}

impl Default for ChecksSection {
    fn default() -> Self {
        Self { samples: 50, seed: 0, eps: 0.1, etas: vec![0.2, 0.1, 0.05], nx: 32, nz: 48 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    pub eos: EosSection,
    pub gap: GapSection,
    pub physics: PhysicsSection,
    pub reynolds: ReynoldsSection,
    pub thinfilm: ThinFilmSection,
    pub checks: ChecksSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            eos: EosSection::default(),
            gap: GapSection::default(),
            physics: PhysicsSection::default(),
            reynolds: ReynoldsSection::default(),
            thinfilm: ThinFilmSection::default(),
            checks: ChecksSection::default(),
        }
    }
}

/// One failed constraint, named by its dotted key.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{} invalid setting(s): {}", .0.len(), join(.0))]
    Invalid(Vec<Violation>),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Reads, parses and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
        ConfigError::Parse { line, column, message: e.message().to_string() }
    })?;
    let v = cfg.violations();
    if v.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(v))
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    (line, column)
}

impl RunConfig {
    /// SHA-256 of the canonical JSON form (defaults filled in).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn law(&self) -> lubrix_core::Result<PressureLaw> {
        let e = &self.eos;
        match e.family {
            Family::HardSphere => PressureLaw::new(e.rho_bar, e.theta, PressureFamily::Rational { a: e.a, gamma: 1.0 }),
            Family::Rational => PressureLaw::rational(e.rho_bar, e.a, e.gamma, e.theta),
            Family::Log => PressureLaw::log(e.rho_bar, e.a, e.theta),
        }
    }

    pub fn gap_profile(&self) -> lubrix_core::Result<GapProfile> {
        if self.gap.cos.is_empty() {
            GapProfile::constant(self.gap.mean)
        } else {
            GapProfile::cosine(self.gap.mean, self.gap.cos.clone())
        }
    }

    pub fn reynolds_problem(&self) -> lubrix_core::Result<ReynoldsProblem> {
        let p = &self.physics;
        ReynoldsProblem::new(self.gap_profile()?, p.mu, p.s, p.mass, self.law()?)
    }

    pub fn shooting_options(&self) -> ShootingOptions {
        ShootingOptions {
            tol_shoot: self.reynolds.tol_shoot,
            tol_mass: self.reynolds.tol_mass,
            ..ShootingOptions::default()
        }
    }

    pub fn thinfilm_problem(&self, eps: f64) -> lubrix_core::Result<ThinFilmProblem> {
        let p = &self.physics;
        let mut prob = ThinFilmProblem::new(self.gap_profile()?, p.mu, p.lambda_visc, p.s, eps, p.mass, self.law()?)?;
        if let Some(r) = self.thinfilm.truncation {
            prob.truncation = r;
            prob = prob.with_eps(eps)?;
        }
        Ok(prob)
    }

    pub fn thinfilm_options(&self) -> ThinFilmOptions {
        let t = &self.thinfilm;
        ThinFilmOptions {
            nx: t.nx,
            nz: t.nz,
            relaxation: t.relaxation,
            picard_sweeps: t.picard_sweeps,
            delta_start: t.delta_start,
            delta_factor: t.delta_factor,
            delta_min: t.delta_min,
            newton_tol: t.newton_tol,
            max_newton: t.max_newton,
            ..ThinFilmOptions::default()
        }
    }

    pub fn check_domain(&self) -> lubrix_core::Result<CheckDomain> {
        Ok(CheckDomain {
            gap: self.gap_profile()?,
            eps: self.checks.eps,
            mu: self.physics.mu,
            lambda_visc: self.physics.lambda_visc,
        })
    }

    /// Every violated constraint, not just the first.
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let mut bad = |key: &str, message: String| v.push(Violation { key: key.into(), message });

        let law = self.law();
        if let Err(e) = &law {
            bad("eos", e.to_string());
        }
        let gap = self.gap_profile();
        if let Err(e) = &gap {
            bad("gap", e.to_string());
        }
        let p = &self.physics;
        if !(p.mu > 0.0) {
            bad("physics.mu", format!("must be positive, got {}", p.mu));
        }
        if !(p.lambda_visc > 0.0) {
            bad("physics.lambda_visc", format!("must be positive, got {}", p.lambda_visc));
        }
        if !(p.s >= 0.0 && p.s.is_finite()) {
            bad("physics.s", format!("must be finite and >= 0, got {}", p.s));
        }
        if let (Ok(l), Ok(g)) = (&law, &gap) {
            let mean = p.mass / g.area();
            if !(mean > 0.0 && mean < l.rho_bar) {
                bad(
                    "physics.mass",
                    format!("mean density M/|Q| = {mean} must lie in (0, rho_bar = {}) (fixed total mass below maximal packing)", l.rho_bar),
                );
            }
            let r = self.thinfilm.truncation.unwrap_or(1e3 / l.rho_bar);
            if !(r * l.rho_bar > 1.0) {
                bad("thinfilm.truncation", format!("R = {r} must exceed 1/rho_bar"));
            } else if !(l.rho_bar - 1.0 / r > mean) {
                bad("thinfilm.truncation", format!("knot rho_bar - 1/R = {} must exceed the mean density {mean}", l.rho_bar - 1.0 / r));
            }
        }

        let r = &self.reynolds;
        if r.n < 8 {
            bad("reynolds.n", format!("need at least 8 cells, got {}", r.n));
        }
        if r.fv_n < 32 || r.fv_n % 4 != 0 {
            bad("reynolds.fv_n", format!("must be a multiple of 4 and >= 32, got {}", r.fv_n));
        }
        for (key, val) in [("reynolds.tol_shoot", r.tol_shoot), ("reynolds.tol_mass", r.tol_mass), ("reynolds.fv_tol", r.fv_tol)] {
            if !(val > 0.0) {
                bad(key, format!("must be positive, got {val}"));
            }
        }

        let t = &self.thinfilm;
        if !(4..=MAX_NX).contains(&t.nx) {
            bad("thinfilm.nx", format!("must lie in 4..={MAX_NX}, got {}", t.nx));
        }
        if !(4..=MAX_NZ).contains(&t.nz) {
            bad("thinfilm.nz", format!("must lie in 4..={MAX_NZ}, got {}", t.nz));
        }
        if !(t.eps > 0.0) {
            bad("thinfilm.eps", format!("must be positive, got {}", t.eps));
        }
        if t.eps_list.is_empty() || t.eps_list.iter().any(|e| !(*e > 0.0)) {
            bad("thinfilm.eps_list", "must be a non-empty list of positive values".into());
        } else if t.eps_list.windows(2).any(|w| !(w[1] < w[0])) {
            bad("thinfilm.eps_list", "must be strictly decreasing".into());
        }
        if !(t.delta_min > 0.0 && t.delta_min <= t.delta_start) {
            bad("thinfilm.delta_min", format!("must lie in (0, delta_start = {}], got {}", t.delta_start, t.delta_min));
        }
        if !(t.delta_factor > 0.0 && t.delta_factor < 1.0) {
            bad("thinfilm.delta_factor", format!("must lie in (0, 1), got {}", t.delta_factor));
        }
        if !(t.relaxation > 0.0 && t.relaxation <= 1.0) {
            bad("thinfilm.relaxation", format!("must lie in (0, 1], got {}", t.relaxation));
        }
        if !(t.newton_tol > 0.0) {
            bad("thinfilm.newton_tol", format!("must be positive, got {}", t.newton_tol));
        }

        let c = &self.checks;
        if c.samples == 0 {
            bad("checks.samples", "must be at least 1".into());
        }
        if !(c.eps > 0.0) {
            bad("checks.eps", format!("must be positive, got {}", c.eps));
        }
        if !(4..=MAX_NX).contains(&c.nx) || !(4..=MAX_NZ).contains(&c.nz) {
            bad("checks.nx", format!("check grid must lie within 4..={MAX_NX} x 4..={MAX_NZ}, got {} x {}", c.nx, c.nz));
        }
        if let Ok(g) = &gap {
            for eta in &c.etas {
                if !(*eta > 0.0 && *eta < g.h_min()) {
                    bad("checks.etas", format!("layer width {eta} must lie in (0, h_min = {})", g.h_min()));
                }
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gets_defaults_and_stable_hash() {
        let a = parse_config("").unwrap();
        assert_eq!(a, RunConfig::default());
        let b = parse_config("[physics]\nmass = 0.4\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = parse_config("[physics]\nmasss = 0.3\n").unwrap_err();
        match e {
            ConfigError::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("masss"), "{message}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn all_violations_are_listed() {
        let e = parse_config("[physics]\nmass = 1.5\nmu = -1\n[thinfilm]\nnx = 500\neps_list = [0.1, 0.2]\n").unwrap_err();
        let ConfigError::Invalid(v) = e else { panic!("{e}") };
        let keys: Vec<_> = v.iter().map(|x| x.key.as_str()).collect();
        for k in ["physics.mass", "physics.mu", "thinfilm.nx", "thinfilm.eps_list"] {
            assert!(keys.contains(&k), "{keys:?}");
        }
        assert!(v.iter().any(|x| x.message.contains("rho_bar")));
    }

    #[test]
    fn wide_layer_rejected() {
        let e = parse_config("[gap]\nmean = 1.0\ncos = [0.5]\n[checks]\netas = [0.6]\n").unwrap_err();
        let ConfigError::Invalid(v) = e else { panic!("{e}") };
        assert_eq!(v[0].key, "checks.etas");
    }
}
