//! Report emission: RFC-4180 CSV tables, pretty JSON summaries and the run
//! report with its content hash.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

/// Shortest round-trip decimal form; identical across runs and platforms.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:?}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Grid coordinates joined with `;`.
pub fn coords(c: &[usize]) -> String {
    c.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// An in-memory CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// One pass/fail line of the rollup, named after the invariant it checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub kind: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: RunConfig,
    /// SHA-256 over git-style blob headers of every input file.
    pub input_hash: String,
    pub seed: u64,
    pub rng: String,
    pub threads: Option<usize>,
    pub outputs: Vec<OutputFile>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    /// Wall-clock seconds per stage (only here, never in CSVs).
    pub timings: BTreeMap<String, f64>,
    pub pass: bool,
}

/// Collects outputs for one run; files are recorded only once written.
pub struct Emitter {
    dir: PathBuf,
    pub report: RunReport,
}

impl Emitter {
    pub fn new(dir: &Path, report: RunReport) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            report,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn record(&mut self, name: &str, kind: &str) {
        self.report.outputs.push(OutputFile {
            path: name.into(),
            kind: kind.into(),
        });
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_path(&path)?;
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        self.record(name, "csv");
        Ok(())
    }

    pub fn json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.record(name, "json");
        Ok(())
    }

    pub fn bytes(&mut self, name: &str, data: &[u8], kind: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, data).map_err(|e| CliError::io(&path, e))?;
        self.record(name, kind);
        Ok(())
    }

    pub fn check(&mut self, check: Check) {
        self.report.checks.push(check);
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.report.warnings.push(msg.into());
    }

    pub fn time(&mut self, stage: &str, secs: f64) {
        self.report.timings.insert(stage.into(), secs);
    }

    /// Sets the rollup and writes `report.json`.
    pub fn finish(mut self) -> Result<RunReport, CliError> {
        self.report.pass = self.report.checks.iter().all(|c| c.pass);
        let path = self.dir.join("report.json");
        let mut text = serde_json::to_string_pretty(&self.report)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(self.report)
    }
}

/// Hash of `blob <len>\0<bytes>` per input, chained in order.
pub fn input_hash(inputs: &[&[u8]]) -> String {
    let mut outer = Sha256::new();
    for data in inputs {
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", data.len()).as_bytes());
        h.update(data);
        outer.update(h.finalize());
    }
    outer
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_are_shortest_round_trip() {
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(1e-300), "1e-300");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(-0.0), "-0.0");
        assert_eq!(num(1.0), "1.0");
        assert_eq!(num(0.1 + 0.2).parse::<f64>().unwrap(), 0.1 + 0.2);
        assert_eq!(opt(None), "");
        assert_eq!(coords(&[3, 4]), "3;4");
    }

    #[test]
    fn hash_depends_on_every_input() {
        let a = input_hash(&[b"x", b"y"]);
        assert_eq!(a, input_hash(&[b"x", b"y"]));
        assert_ne!(a, input_hash(&[b"x", b"z"]));
        assert_ne!(a, input_hash(&[b"xy"]));
        assert_eq!(a.len(), 64);
    }
}
