//! CSV and JSON serialization shared by the subcommands.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::CliError;

/// Locale-independent float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    ensure_parent(path)?;
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush()
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numerical(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.exists() => std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", dir.display()))),
        _ => Ok(()),
    }
}

/// `dir/name.csv` → `dir/name.<suffix>`.
pub fn companion_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}

/// Provenance written next to every CSV.
#[derive(Debug, Serialize)]
pub struct Sidecar<'a, C: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub master_seed: Option<u64>,
    pub config: &'a C,
}

/// Numeric table read back from a CSV, keyed by header name.
#[derive(Debug, Clone)]
pub struct Table {
    index: HashMap<String, usize>,
    pub rows: Vec<Vec<f64>>,
    path: PathBuf,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let mut r = csv::Reader::from_path(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let headers = r
            .headers()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            .clone();
        let index = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_string(), i))
            .collect();
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let row = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| {
                    CliError::Config(format!("{}: data row {}: {e}", path.display(), line + 1))
                })?;
            rows.push(row);
        }
        Ok(Self {
            index,
            rows,
            path: path.to_path_buf(),
        })
    }

    pub fn column(&self, name: &str) -> Result<usize, CliError> {
        self.index.get(name).copied().ok_or_else(|| {
            CliError::Config(format!("{}: missing column `{name}`", self.path.display()))
        })
    }
}
