//! Report, table and fixture files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{ExitStatus, TOOL_NAME, TOOL_VERSION};
use crate::{Error, Result};

/// A CSV table; cells are already formatted.
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

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Config(format!("CSV {}: {e}", self.name));
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.into_inner().map_err(|e| Error::Config(format!("CSV {}: {e}", self.name)))
    }
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Everything a command produces before it touches the filesystem.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub command: &'static str,
    pub seed: Option<u64>,
    pub config: Value,
    pub passed: bool,
    pub exit: ExitStatus,
    pub result: Value,
    pub tables: Vec<Table>,
    pub fixtures: Vec<Value>,
}

pub fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Domain(format!("serialisation failed: {e}")))
}

fn pretty(v: &Value) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(v).map_err(|e| Error::Domain(format!("serialisation failed: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// `sha256` of the pretty-printed fixture, as lowercase hex.
pub fn fixture_name(fixture: &Value) -> Result<String> {
    let digest = Sha256::digest(pretty(fixture)?);
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(format!("{hex}.json"))
}

impl RunOutput {
    pub fn table_file(&self, t: &Table) -> String {
        format!("{}-{}.csv", self.command, t.name)
    }

    /// The report document; identical for identical inputs.
    pub fn report(&self) -> Result<Value> {
        let fixtures = self.fixtures.iter().map(fixture_name).collect::<Result<Vec<_>>>()?;
        let tables: Vec<String> = self.tables.iter().map(|t| self.table_file(t)).collect();
        Ok(json!({
            "tool": { "name": TOOL_NAME, "version": TOOL_VERSION },
            "command": self.command,
            "seed": self.seed,
            "config": self.config,
            "passed": self.passed,
            "exit_code": self.exit.code(),
            "tables": tables,
            "fixtures": fixtures.iter().map(|f| format!("fixtures/{f}")).collect::<Vec<_>>(),
            "result": self.result,
        }))
    }

    pub fn report_bytes(&self) -> Result<Vec<u8>> {
        pretty(&self.report()?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WrittenFiles {
    pub report: PathBuf,
    pub meta: PathBuf,
    pub tables: Vec<PathBuf>,
    pub fixtures: Vec<PathBuf>,
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

/// Writes `<command>.json`, `<command>.meta.json`, one CSV per table and the
/// fixtures under `fixtures/`.
pub fn write_outputs(out_dir: &Path, run: &RunOutput, jobs: Option<usize>) -> Result<WrittenFiles> {
    let fixture_dir = out_dir.join("fixtures");
    fs::create_dir_all(&fixture_dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", fixture_dir.display())))?;
    let report = out_dir.join(format!("{}.json", run.command));
    write(&report, &run.report_bytes()?)?;

    let mut tables = Vec::new();
    for t in &run.tables {
        let path = out_dir.join(run.table_file(t));
        write(&path, &t.to_csv()?)?;
        tables.push(path);
    }
    let mut fixtures = Vec::new();
    for f in &run.fixtures {
        let path = fixture_dir.join(fixture_name(f)?);
        write(&path, &pretty(f)?)?;
        fixtures.push(path);
    }

    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = out_dir.join(format!("{}.meta.json", run.command));
    write(
        &meta,
        &pretty(&json!({
            "report": report.file_name().and_then(|s| s.to_str()),
            "timestamp_unix": now,
            "jobs": jobs,
            "tool_version": TOOL_VERSION,
        }))?,
    )?;
    Ok(WrittenFiles { report, meta, tables, fixtures })
}
