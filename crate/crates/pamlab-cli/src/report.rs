//! Experiment reports and their bit-stable JSON / CSV forms.

use crate::CliError;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    /// Monte Carlo standard error
    Stderr,
    /// quadrature or discretization error estimate
    Quad,
    /// closed form evaluated in floating point
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub label: String,
    pub value: f64,
    pub error: f64,
    pub error_kind: ErrorKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// A numeric table written as CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Curve {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| fmt_float(*x)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: BTreeMap<String, String>,
    pub config_hash: String,
    pub results: Vec<Measurement>,
    pub assertions: Vec<Assertion>,
    pub curves: BTreeMap<String, Curve>,
    pub notes: Vec<String>,
    pub wall_time_s: f64,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn result(&self, label: &str) -> Option<&Measurement> {
        self.results.iter().find(|m| m.label == label)
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    /// File stem `<experiment>-<first 16 hex digits of the config hash>`.
    pub fn stem(&self) -> String {
        format!("{}-{}", self.experiment, &self.config_hash[..16])
    }
}

/// 17 significant digits. Non-finite values have no JSON form and are written as strings.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("\"{x}\"")
    }
}

fn write_value(out: &mut String, v: &Value) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&fmt_float(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, x);
            }
            out.push(']');
        }
        Value::Object(m) => {
            // serde_json's default map is ordered by key
            out.push('{');
            for (i, (k, x)) in m.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_value(out, x);
            }
            out.push('}');
        }
    }
}

/// Sorted keys, floats at 17 significant digits.
pub fn to_json(report: &ExperimentReport) -> Result<String, CliError> {
    let v = serde_json::to_value(report).map_err(|e| CliError::Io(e.to_string()))?;
    let mut s = String::new();
    write_value(&mut s, &v);
    s.push('\n');
    Ok(s)
}

pub fn from_json(s: &str) -> Result<ExperimentReport, CliError> {
    serde_json::from_str(s).map_err(|e| CliError::Io(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// Writes `<dir>/<stem>.json`, or one `<dir>/<stem>-<curve>.csv` per curve. Returns the paths written.
pub fn write_report(report: &ExperimentReport, format: Format, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let stem = report.stem();
    match format {
        Format::Json => {
            let path = dir.join(format!("{stem}.json"));
            std::fs::write(&path, to_json(report)?).map_err(io)?;
            Ok(vec![path])
        }
        Format::Csv => {
            let mut paths = Vec::new();
            for (name, curve) in &report.curves {
                let path = dir.join(format!("{stem}-{name}.csv"));
                std::fs::write(&path, curve.to_csv()).map_err(io)?;
                paths.push(path);
            }
            Ok(paths)
        }
    }
}
