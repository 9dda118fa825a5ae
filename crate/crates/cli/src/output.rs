//! Tables, JSON documents and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Self::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Float(v)
    }
}

/// Floats are written with Rust's shortest round-trip formatting.
fn csv_cell(c: Cell) -> String {
    match c {
        Cell::Int(v) => v.to_string(),
        Cell::Float(v) => format!("{v:?}"),
    }
}

fn json_cell(c: Cell) -> serde_json::Value {
    match c {
        Cell::Int(v) => v.into(),
        Cell::Float(v) => serde_json::Number::from_f64(v).map_or(serde_json::Value::Null, Into::into),
    }
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                s.push_str(&csv_cell(*c));
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = String::from("[\n");
        for (r, row) in self.rows.iter().enumerate() {
            let obj: serde_json::Map<String, serde_json::Value> =
                self.columns.iter().zip(row).map(|(k, c)| (k.to_string(), json_cell(*c))).collect();
            let sep = if r + 1 == self.rows.len() { "" } else { "," };
            let _ = writeln!(s, "  {}{sep}", serde_json::Value::Object(obj));
        }
        s.push_str("]\n");
        s
    }
}

/// Collects the files a command writes.
pub struct OutputDir<'a> {
    dir: &'a Path,
    pub format: Format,
    pub written: Vec<String>,
}

impl<'a> OutputDir<'a> {
    pub fn new(dir: &'a Path, format: Format) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir, format, written: Vec::new() })
    }

    fn write(&mut self, name: String, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(&name);
        std::fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(name);
        Ok(())
    }

    pub fn table(&mut self, stem: &str, table: &Table) -> Result<(), CliError> {
        match self.format {
            Format::Csv => self.write(format!("{stem}.csv"), &table.to_csv()),
            Format::Json => self.write(format!("{stem}.json"), &table.to_json()),
        }
    }

    pub fn json<T: Serialize>(&mut self, stem: &str, value: &T) -> Result<(), CliError> {
        let mut body = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        body.push('\n');
        self.write(format!("{stem}.json"), &body)
    }

    pub fn manifest(&self, command: &str, config: &BTreeMap<String, String>, seed: u64) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config: config.clone(),
            outputs: self.written.clone(),
        };
        let mut body = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        body.push('\n');
        let path = self.dir.join(MANIFEST_FILE);
        std::fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to re-run a command. Output paths are relative to the
/// output directory, so a replay elsewhere reproduces this file too.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("malformed manifest {}: {e}", path.display())))
    }
}
