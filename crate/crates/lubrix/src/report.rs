//! Machine-readable run reports and flat-file artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    SolverFailure,
    ValidationFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

/// Report embedded in every JSON artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub command: String,
    pub config_hash: String,
    pub version: String,
    pub status: Status,
    pub residuals: BTreeMap<String, f64>,
    pub metrics: serde_json::Value,
    pub wall_time_s: BTreeMap<String, f64>,
    pub diagnostic: Option<Diagnostic>,
}

impl SolverReport {
    pub fn new(command: &str, config_hash: &str) -> Self {
        Self {
            command: command.into(),
            config_hash: config_hash.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            status: Status::Ok,
            residuals: BTreeMap::new(),
            metrics: serde_json::Value::Object(Default::default()),
            wall_time_s: BTreeMap::new(),
            diagnostic: None,
        }
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        fs::write(path, text + "\n")
    }

    pub fn read(path: &Path) -> io::Result<Self> {
        serde_json::from_str(&fs::read_to_string(path)?).map_err(io::Error::other)
    }
}

/// Full double precision, `.` decimal separator.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `rows` under a `# config_hash: …` line and the column header.
pub fn write_csv(
    path: &Path,
    config_hash: &str,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> io::Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{CSV_HASH_PREFIX}{config_hash}")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()
}

/// Config hash recorded in the first line of a CSV artifact.
pub fn csv_config_hash(path: &Path) -> io::Result<Option<String>> {
    let mut line = String::new();
    io::BufReader::new(std::fs::File::open(path)?).read_line(&mut line)?;
    Ok(line.trim_end().strip_prefix(CSV_HASH_PREFIX).map(str::to_owned))
}

const CSV_HASH_PREFIX: &str = "# config_hash: ";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_identity() {
        let mut r = SolverReport::new("reynolds solve", "abc");
        r.residuals.insert("mass".into(), 1.234_567_890_123_456_7e-13);
        r.metrics = serde_json::json!({ "lambda_flux": -0.155_887_551_762_674_03, "cases": [1, 2.5] });
        r.wall_time_s.insert("solve".into(), 0.1);
        r.diagnostic = Some(Diagnostic { kind: "singular".into(), message: "x".into(), exit_code: 2 });
        let text = serde_json::to_string(&r).unwrap();
        let back: SolverReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn csv_keeps_seventeen_digits() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_csv(&p, "abc", &["x"], [vec![0.1 + 0.2]]).unwrap();
        assert_eq!(csv_config_hash(&p).unwrap().as_deref(), Some("abc"));
        let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(&p).unwrap();
        let v: f64 = rd.records().next().unwrap().unwrap()[0].parse().unwrap();
        assert_eq!(v, 0.1 + 0.2);
    }
}
