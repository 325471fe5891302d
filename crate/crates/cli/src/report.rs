//! Report assembly and atomic output.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::CliResult;

pub const REPORT_SCHEMA: &str = "shrinkerlab.report/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// A command result: a JSON document, the same content as CSV rows, and
/// extra files (traces, plot series) written next to it.
#[derive(Debug)]
pub struct Report {
    pub command: &'static str,
    pub result: Value,
    pub csv_header: Vec<&'static str>,
    pub csv_rows: Vec<Vec<String>>,
    pub artifacts: Vec<(String, Vec<u8>)>,
    /// Lines echoed to stdout.
    pub summary: Vec<String>,
    /// Set when a check failed; the report is still written.
    pub failure: Option<String>,
    pub numerical_failure: Option<String>,
}

impl Report {
    pub fn new(command: &'static str, result: Value) -> Self {
        Self {
            command,
            result,
            csv_header: Vec::new(),
            csv_rows: Vec::new(),
            artifacts: Vec::new(),
            summary: Vec::new(),
            failure: None,
            numerical_failure: None,
        }
    }

    pub fn table(mut self, header: &[&'static str], rows: Vec<Vec<String>>) -> Self {
        self.csv_header = header.to_vec();
        self.csv_rows = rows;
        self
    }

    pub fn json_document(&self, config: &BTreeMap<String, String>) -> String {
        let doc = json!({
            "schema": REPORT_SCHEMA,
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "result": self.result,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("reports always serialize");
        text.push('\n');
        text
    }

    pub fn csv_document(&self) -> String {
        let mut out = self.csv_header.join(",");
        out.push('\n');
        for row in &self.csv_rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Writes the report and its artifacts under `dir`; returns the report path.
    pub fn write(&self, dir: &Path, format: Format, config: &BTreeMap<String, String>) -> CliResult<PathBuf> {
        fs::create_dir_all(dir)?;
        let (name, body) = match format {
            Format::Json => (format!("{}.json", self.command), self.json_document(config)),
            Format::Csv => (format!("{}.csv", self.command), self.csv_document()),
        };
        for (file, bytes) in &self.artifacts {
            write_atomic(&dir.join(file), bytes)?;
        }
        let path = dir.join(name);
        write_atomic(&path, body.as_bytes())?;
        Ok(path)
    }
}

/// Writes through a temporary sibling and renames it into place, so readers
/// never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Shortest round-trip formatting, so CSV and JSON carry the same digits.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else {
        String::new()
    }
}

pub fn kv_rows(pairs: &[(&str, String)]) -> Vec<Vec<String>> {
    pairs.iter().map(|(k, v)| vec![k.to_string(), v.clone()]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_layout() {
        let r = Report::new("spectrum", json!({"mu": [-1.0, 0.5]}))
            .table(&["index", "mu"], vec![vec!["0".into(), num(-1.0)], vec!["1".into(), num(0.5)]]);
        assert_eq!(r.csv_document(), "index,mu\n0,-1.0\n1,0.5\n");
        let cfg = BTreeMap::from([("nodes".to_string(), "64".to_string())]);
        let doc: Value = serde_json::from_str(&r.json_document(&cfg)).unwrap();
        assert_eq!(doc["config"]["nodes"], "64");
        assert_eq!(doc["result"]["mu"][1], 0.5);
    }

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.json");
        write_atomic(&p, b"{}").unwrap();
        write_atomic(&p, b"[]").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "[]");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
