//! CSV tables and the JSON summary written for every command.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::CliError;

/// Fixed float format: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).map_err(io_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(io_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }
}

fn io_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// `base.csv` for a single direction, `base_007.csv` otherwise.
pub fn per_direction(base: &str, index: usize, count: usize) -> String {
    if count == 1 {
        format!("{base}.csv")
    } else {
        format!("{base}_{index:03}.csv")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    NotConverged,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub command: String,
    pub version: String,
    pub status: Status,
    pub config_hash: String,
    pub config: RunConfig,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
    pub results: Value,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub status: Status,
    pub tables: Vec<Table>,
    /// Extra JSON documents, by file name.
    pub documents: Vec<(String, Value)>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
    pub results: Value,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            status: Status::Ok,
            tables: Vec::new(),
            documents: Vec::new(),
            warnings: Vec::new(),
            notes: Vec::new(),
            results: Value::Null,
        }
    }

    pub fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }

    pub fn note(&mut self, msg: String) {
        log::info!("{msg}");
        self.notes.push(msg);
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn summary(&self, cfg: &RunConfig) -> Summary {
        let mut files: Vec<String> = self.tables.iter().map(|t| t.name.clone()).collect();
        files.extend(self.documents.iter().map(|d| d.0.clone()));
        Summary {
            command: self.command.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            status: self.status,
            config_hash: cfg.hash(),
            config: cfg.clone(),
            files,
            warnings: self.warnings.clone(),
            notes: self.notes.clone(),
            results: self.results.clone(),
        }
    }

    /// Writes every table, document and `summary.json` into `dir`.
    pub fn write(&self, cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let mut written = Vec::new();
        let mut put = |name: &str, body: String| -> Result<(), CliError> {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            written.push(p);
            Ok(())
        };
        for t in &self.tables {
            put(&t.name, t.to_csv()?)?;
        }
        for (name, v) in &self.documents {
            put(name, pretty(v)?)?;
        }
        let s = serde_json::to_value(self.summary(cfg)).map_err(|e| CliError::Io(e.to_string()))?;
        put("summary.json", pretty(&s)?)?;
        Ok(written)
    }
}

fn pretty(v: &Value) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_lf_and_fixed_floats() {
        let mut t = Table::new("x.csv", &["a", "b"]);
        t.push(vec![fmt_f64(0.1), fmt_f64(-3.0)]);
        let s = t.to_csv().unwrap();
        assert_eq!(s, "a,b\n1.0000000000000001e-1,-3.0000000000000000e0\n");
        assert_eq!(per_direction("eigenvalues", 3, 1), "eigenvalues.csv");
        assert_eq!(per_direction("eigenvalues", 3, 12), "eigenvalues_003.csv");
    }
}
