use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

pub const TOOL: &str = "qdphonon";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub parameters: Value,
}

impl Provenance {
    pub fn new(command: &str, seed: u64, parameters: Value) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            command: command.to_string(),
            seed,
            parameters,
        }
    }
}

/// Table with a `#` provenance preamble.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn render(&self, prov: &Provenance) -> Result<String, CliError> {
        let mut out = String::new();
        writeln!(out, "# {} {} {}", prov.tool, prov.version, prov.command).unwrap();
        writeln!(out, "# seed: {}", prov.seed).unwrap();
        writeln!(out, "# parameters: {}", serde_json::to_string(&prov.parameters)?).unwrap();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        Ok(out)
    }
}

pub fn report<T: Serialize>(prov: &Provenance, result: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(&json!({ "provenance": prov, "result": result }))?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Compute(qdphonon::Error::Io {
            path: p.display().to_string(),
            source: e,
        })),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Compute(qdphonon::Error::Io {
                    path: "<stdout>".into(),
                    source: e,
                }))
        }
    }
}

pub fn check_input(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("input file {} does not exist", path.display())))
    }
}

pub fn check_output(path: Option<&PathBuf>) -> Result<(), CliError> {
    let Some(path) = path else { return Ok(()) };
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if parent.is_dir() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("output directory {} does not exist", parent.display())))
    }
}
