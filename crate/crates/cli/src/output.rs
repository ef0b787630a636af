//! CSV and manifest writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Seventeen significant digits, enough to read every double back exactly.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a comma-separated table with a header row and LF line endings.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()
}

/// Writes `key=value` lines.
pub fn write_key_values(path: &Path, pairs: &[(String, String)]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (k, v) in pairs {
        writeln!(w, "{k}={v}")?;
    }
    w.flush()
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub role: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub phase: String,
    pub seconds: f64,
}

/// Record of one run: what was asked for, what was written, and how long it took.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub command: String,
    pub config: C,
    pub status: String,
    pub iterations: Option<usize>,
    pub outputs: Vec<OutputEntry>,
    pub timings: Vec<Timing>,
    pub software_version: String,
}

impl<C: Serialize> RunManifest<C> {
    pub fn new(command: &str, config: C) -> Self {
        Self {
            command: command.to_string(),
            config,
            status: "ok".to_string(),
            iterations: None,
            outputs: Vec::new(),
            timings: Vec::new(),
            software_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn output(&mut self, role: &str, path: &Path) {
        self.outputs.push(OutputEntry {
            role: role.to_string(),
            path: path.to_path_buf(),
        });
    }

    pub fn timing(&mut self, phase: &str, seconds: f64) {
        self.timings.push(Timing {
            phase: phase.to_string(),
            seconds,
        });
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(path, json + "\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(real(v).parse::<f64>().unwrap().to_bits(), v.to_bits(), "{v}");
        }
        assert_eq!(real(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_csv(&p, &["a", "b"], vec![vec!["1".into(), "2".into()]]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "a,b\n1,2\n");
    }
}
