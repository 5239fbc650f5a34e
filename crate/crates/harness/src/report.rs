//! Report tables, summaries, and their deterministic serialization.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{HarnessError, Result};

/// Shortest round-trip decimal form of `x`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A CSV-shaped table with a fixed column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Parse a numeric column.
    pub fn values(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column(name)?;
        self.rows.iter().map(|r| r[k].parse().ok()).collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Experiment(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Where a report came from. No timestamps, so reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub tool_version: String,
    pub core_version: String,
}

impl Provenance {
    pub fn of(cfg: &ExperimentConfig) -> Self {
        Self {
            config_sha256: sha256_hex(cfg.canonical_json().as_bytes()),
            seed: cfg.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            core_version: uhlmann_dmrg::VERSION.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub experiment: ExperimentKind,
    /// File stem to table.
    pub tables: BTreeMap<String, Table>,
    pub summary: Value,
    pub provenance: Provenance,
    /// False when any solve hit its sweep limit.
    pub converged: bool,
}

impl ScanReport {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.get(name)
    }

    /// Summary, provenance and convergence flag as pretty JSON, keys sorted.
    pub fn summary_json(&self) -> Result<String> {
        let doc = serde_json::json!({
            "experiment": self.experiment.as_str(),
            "converged": self.converged,
            "provenance": self.provenance,
            "summary": self.summary,
        });
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }

    /// Rendered files in write order: one CSV per table, then `summary.json`.
    pub fn render(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for (name, table) in &self.tables {
            out.push((format!("{name}.csv"), table.to_csv()?));
        }
        out.push(("summary.json".to_string(), self.summary_json()?));
        Ok(out)
    }

    /// Write every rendered file into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let files = self.render()?;
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.display().to_string(), source })?;
        let mut paths = Vec::new();
        for (name, contents) in files {
            let path = dir.join(name);
            std::fs::write(&path, contents)
                .map_err(|source| HarnessError::Io { path: path.display().to_string(), source })?;
            paths.push(path);
        }
        Ok(paths)
    }
}

/// `100 (e_ref - e) / e_ref`, zero when the reference error is zero.
pub fn improvement_percent(reference: f64, error: f64) -> f64 {
    if reference == 0.0 {
        0.0
    } else {
        100.0 * (reference - error) / reference
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_per_rfc4180() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec!["x,y".into(), "say \"hi\"".into()]);
        assert_eq!(t.to_csv().unwrap(), "a,b\r\n\"x,y\",\"say \"\"hi\"\"\"\r\n");
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0, -2.5e-22, 1.0 / 3.0, 1e300] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.25), "0.25");
    }

    #[test]
    fn improvement_percentages() {
        assert!((improvement_percent(0.12, 0.03) - 75.0).abs() < 1e-12);
        assert_eq!(improvement_percent(0.0, 0.0), 0.0);
        assert_eq!(improvement_percent(2.0, 2.0), 0.0);
    }

    #[test]
    fn digest_matches_known_vector() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
