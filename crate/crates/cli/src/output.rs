//! Artifact persistence: `report.json`, one CSV per table and `summary.txt`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{CliError, RunStatus};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Shortest round-trip representation: stable across runs.
            Cell::Num(x) if x.is_finite() => write!(f, "{x:e}"),
            Cell::Num(x) if x.is_nan() => f.write_str("nan"),
            Cell::Num(x) => f.write_str(if *x > 0.0 { "inf" } else { "-inf" }),
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, header: &[&'static str]) -> Self {
        Self { name, header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len(), "{}", self.name);
        self.rows.push(row);
    }
}

/// Everything a subcommand produces.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub status: RunStatus,
    pub message: Option<String>,
    pub results: Value,
    pub tables: Vec<Table>,
    pub summary: Vec<String>,
}

impl Artifacts {
    pub fn ok(results: Value, tables: Vec<Table>, summary: Vec<String>) -> Self {
        Self { status: RunStatus::Ok, message: None, results, tables, summary }
    }

    pub fn failed(e: &fracevo::Error) -> Self {
        Self {
            status: RunStatus::of_error(e),
            message: Some(e.to_string()),
            results: Value::Null,
            tables: Vec::new(),
            summary: vec![format!("stopped: {e}")],
        }
    }

    pub fn with_status(mut self, status: RunStatus, message: impl Into<String>) -> Self {
        self.status = status;
        self.message = Some(message.into());
        self
    }
}

/// JSON number, or a string for non-finite values.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// Writes all artifacts into `dir` and returns the created paths.
pub fn write_artifacts(dir: &Path, command: &str, config: &RunConfig, art: &Artifacts) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut files = Vec::new();
    for t in &art.tables {
        let path = dir.join(format!("{}.csv", t.name));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&t.header)?;
        for row in &t.rows {
            w.write_record(row.iter().map(|c| c.to_string()))?;
        }
        w.flush()?;
        files.push(format!("{}.csv", t.name));
        written.push(path);
    }

    let report = json!({
        "command": command,
        "status": art.status.label(),
        "exit_code": art.status.exit_code(),
        "message": art.message,
        "config": config,
        "results": art.results,
        "files": files,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let path = dir.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
    written.push(path);

    let mut text = format!("fracevo {command}: {}\n", art.status.label());
    for line in &art.summary {
        text.push_str(line);
        text.push('\n');
    }
    let path = dir.join("summary.txt");
    fs::write(&path, text)?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_format_stably() {
        assert_eq!(Cell::Num(0.1).to_string(), "1e-1");
        assert_eq!(Cell::Num(f64::INFINITY).to_string(), "inf");
        assert_eq!(Cell::Int(7).to_string(), "7");
        assert_eq!(num(f64::INFINITY), json!("inf"));
        assert_eq!(num(2.5), json!(2.5));
    }
}
