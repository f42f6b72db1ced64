//! Result tables and their CSV/JSON emission.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::config::{Format, SweepConfig, SCHEMA_VERSION};
use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => quote(s),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Cell::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Float(v) if v.is_finite() => s.serialize_f64(*v),
            Cell::Float(v) => s.serialize_str(&v.to_string()),
            Cell::Int(v) => s.serialize_i64(*v),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Bool(b) => s.serialize_bool(*b),
            Cell::Empty => s.serialize_none(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    #[serde(serialize_with = "rows")]
    pub rows: Vec<Vec<Cell>>,
}

fn rows<S: Serializer>(rows: &[Vec<Cell>], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(rows.len()))?;
    for r in rows {
        seq.serialize_element(r)?;
    }
    seq.end()
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match table `{}`", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn get(&self, row: usize, col: &str) -> Option<&Cell> {
        self.column(col).and_then(|c| self.rows.get(row).map(|r| &r[c]))
    }

    /// Values of `col` for rows where `filter` holds.
    pub fn floats_where(&self, col: &str, filter: impl Fn(&[Cell]) -> bool) -> Vec<f64> {
        let c = self.column(col).unwrap_or_else(|| panic!("no column `{col}` in `{}`", self.name));
        self.rows.iter().filter(|r| filter(r)).filter_map(|r| r[c].as_f64()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.iter().map(|c| quote(c)).collect::<Vec<_>>().join(",");
        s.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(Cell::csv).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Everything a sweep produces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    /// Bound rows with `value > bound + tolerance`.
    pub violations: usize,
    pub convergence_failures: usize,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;

impl RunReport {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn exit_code(&self) -> i32 {
        if self.convergence_failures > 0 {
            EXIT_CONVERGENCE
        } else if self.violations > 0 {
            EXIT_VIOLATION
        } else {
            EXIT_OK
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub core_version: &'static str,
    pub schema_version: u32,
    pub experiment: &'static str,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub violations: usize,
    pub convergence_failures: usize,
}

impl Provenance {
    pub fn new(config: &SweepConfig, report: &RunReport) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            tool_version: env!("CARGO_PKG_VERSION"),
            core_version: gimlab_core::VERSION,
            schema_version: SCHEMA_VERSION,
            experiment: config.experiment.name(),
            config_sha256: config.hash(),
            seed: config.seed,
            violations: report.violations,
            convergence_failures: report.convergence_failures,
        }
    }
}

#[derive(Serialize)]
struct JsonDoc<'a> {
    provenance: &'a Provenance,
    checks: &'a [Check],
    tables: &'a [Table],
}

fn write(path: PathBuf, bytes: &[u8]) -> LabResult<PathBuf> {
    std::fs::write(&path, bytes).map_err(|e| LabError::Io { path: path.clone(), source: e })?;
    Ok(path)
}

fn json_bytes<T: Serialize>(v: &T, path: &Path) -> LabResult<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v).map_err(|e| LabError::Json { path: path.into(), source: e })?;
    b.push(b'\n');
    Ok(b)
}

/// Writes the report under `dir`. CSV output gets one file per table plus a
/// provenance sidecar; JSON output is a single document.
pub fn emit(config: &SweepConfig, report: &RunReport, format: Format, dir: &Path) -> LabResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| LabError::Io { path: dir.into(), source: e })?;
    let prov = Provenance::new(config, report);
    let stem = config.experiment.name();
    match format {
        Format::Csv => {
            let mut out = Vec::new();
            for t in &report.tables {
                out.push(write(dir.join(format!("{stem}_{}.csv", t.name)), t.to_csv().as_bytes())?);
            }
            let p = dir.join(format!("{stem}_provenance.json"));
            #[derive(Serialize)]
            struct Sidecar<'a> {
                provenance: &'a Provenance,
                checks: &'a [Check],
                tables: Vec<&'a str>,
            }
            let side = Sidecar { provenance: &prov, checks: &report.checks, tables: report.tables.iter().map(|t| t.name.as_str()).collect() };
            out.push(write(p.clone(), &json_bytes(&side, &p)?)?);
            Ok(out)
        }
        Format::Json => {
            let p = dir.join(format!("{stem}.json"));
            let doc = JsonDoc { provenance: &prov, checks: &report.checks, tables: &report.tables };
            Ok(vec![write(p.clone(), &json_bytes(&doc, &p)?)?])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("demo", &["name", "x", "n", "ok", "gap"]);
        t.push(vec!["a,b".into(), 0.1f64.into(), 3usize.into(), true.into(), Cell::Empty]);
        t.push(vec!["c".into(), (1.0f64 / 3.0).into(), 0usize.into(), false.into(), 1e-300f64.into()]);
        t
    }

    #[test]
    fn csv_has_seventeen_digits() {
        let csv = sample().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "name,x,n,ok,gap");
        assert_eq!(lines[1], "\"a,b\",1.0000000000000001e-1,3,true,");
        assert!(lines[2].starts_with("c,3.3333333333333331e-1,"));
    }

    #[test]
    fn csv_round_trips_through_json() {
        let t = sample();
        let json: serde_json::Value = serde_json::to_value(&t).unwrap();
        let csv = t.to_csv();
        let line = csv.lines().nth(2).unwrap();
        let x: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        let gap: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert_eq!(x.to_bits(), json["rows"][1][1].as_f64().unwrap().to_bits());
        assert_eq!(gap.to_bits(), json["rows"][1][4].as_f64().unwrap().to_bits());
        assert!(json["rows"][0][4].is_null());
    }
}
