//! Deterministic file output: every file is a pure function of the
//! configuration and seed, so re-running a command reproduces it byte for
//! byte. Floats print in shortest round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{OutputFormat, RunConfig, TOOL_NAME, TOOL_VERSION};
use crate::CliError;

/// Run provenance stamped into every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub gamma: f64,
    pub p: f64,
    pub delta: f64,
    pub seed: u64,
    pub replicates: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_individuals: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_events: Option<u64>,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            command: command.to_string(),
            gamma: config.params.gamma(),
            p: config.params.p(),
            delta: config.params.delta(),
            seed: config.seed,
            replicates: config.replicates,
            t_max: config.stop.t_max,
            max_individuals: config.stop.max_individuals,
            max_events: config.stop.max_events,
        }
    }

    /// One-line `#` comment carried at the top of CSV files.
    pub fn csv_comment(&self) -> String {
        let mut line = format!(
            "# {} {} command={} gamma={} p={} delta={} seed={} replicates={}",
            self.tool, self.version, self.command, self.gamma, self.p, self.delta, self.seed,
            self.replicates
        );
        if let Some(t) = self.t_max {
            let _ = write!(line, " t_max={t}");
        }
        if let Some(n) = self.max_individuals {
            let _ = write!(line, " max_individuals={n}");
        }
        if let Some(n) = self.max_events {
            let _ = write!(line, " max_events={n}");
        }
        line
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    U(u64),
    F(f64),
    OptU(Option<u64>),
    OptF(Option<f64>),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::U(v) => v.to_string(),
            Cell::F(v) => v.to_string(),
            Cell::OptU(Some(v)) => v.to_string(),
            Cell::OptF(Some(v)) => v.to_string(),
            Cell::OptU(None) | Cell::OptF(None) => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::U(v) => serde_json::json!(v),
            Cell::F(v) => serde_json::json!(v),
            Cell::OptU(v) => serde_json::json!(v),
            Cell::OptF(v) => serde_json::json!(v),
        }
    }
}

/// Column-ordered table, rendered as CSV or as a JSON array of rows.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_csv(&self, manifest: &Manifest) -> String {
        let mut out = String::new();
        out.push_str(&manifest.csv_comment());
        out.push('\n');
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    fn to_json(&self, manifest: &Manifest) -> Result<String, CliError> {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = serde_json::Map::new();
                for (name, cell) in self.columns.iter().zip(row) {
                    obj.insert((*name).to_string(), cell.json());
                }
                serde_json::Value::Object(obj)
            })
            .collect();
        let doc = serde_json::json!({
            "manifest": manifest,
            "rows": rows,
        });
        Ok(serde_json::to_string_pretty(&doc).map_err(CliError::runtime_from)? + "\n")
    }
}

/// Creates the output directory and returns it.
pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_bytes(path: &Path, bytes: &str) -> Result<(), CliError> {
    fs::write(path, bytes)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

/// Writes `table` as `<stem>.csv` or `<stem>.json` per the configured
/// format; returns the path written.
pub fn write_table(
    dir: &Path,
    stem: &str,
    format: OutputFormat,
    manifest: &Manifest,
    table: &Table,
) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{stem}.{}", format.extension()));
    let body = match format {
        OutputFormat::Csv => table.to_csv(manifest),
        OutputFormat::Json => table.to_json(manifest)?,
    };
    write_bytes(&path, &body)?;
    Ok(path)
}

/// Serializes a report struct as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let body = serde_json::to_string_pretty(value).map_err(CliError::runtime_from)? + "\n";
    write_bytes(&path, &body)?;
    Ok(path)
}
