//! Plot-ready output: CSV files with `#`-prefixed headers, a key=value run
//! manifest, and atomic writes so concurrent or interrupted runs never leave
//! a partially written file behind.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{LatticeError, Result};

/// Write `content` to `path` atomically: the bytes are staged in a sibling
/// temporary file and renamed into place.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| {
            LatticeError::Config(format!(
                "cannot create output directory {}: {e}",
                dir.display()
            ))
        })?;
    }
    let mut staged = path.as_os_str().to_owned();
    staged.push(".tmp");
    let staged = PathBuf::from(staged);
    fs::write(&staged, content).map_err(|e| {
        LatticeError::Config(format!("cannot write {}: {e}", staged.display()))
    })?;
    fs::rename(&staged, path).map_err(|e| {
        LatticeError::Config(format!("cannot move output into {}: {e}", path.display()))
    })?;
    Ok(())
}

/// Deterministic float formatting: Rust's shortest round-trip decimal form,
/// identical on every run for identical values.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// CSV accumulator.  The header is a `#`-prefixed comma-separated list of
/// column names (units belong in the names, e.g. `t_hbar_over_er`); data
/// rows are plain comma-separated shortest-round-trip floats.
pub struct CsvWriter {
    lines: Vec<String>,
    columns: usize,
}

impl CsvWriter {
    /// Start a table with the given column names.
    pub fn new(columns: &[String]) -> CsvWriter {
        CsvWriter {
            lines: vec![format!("# {}", columns.join(","))],
            columns: columns.len(),
        }
    }

    /// As [`CsvWriter::new`] for static column names.
    pub fn with_columns(columns: &[&str]) -> CsvWriter {
        Self::new(&columns.iter().map(|c| c.to_string()).collect::<Vec<_>>())
    }

    /// Add a `#`-prefixed comment line below the header.
    pub fn comment(&mut self, text: &str) {
        self.lines.push(format!("# {text}"));
    }

    /// Append one data row; the value count must match the header.
    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.columns {
            return Err(LatticeError::InvalidInput(format!(
                "CSV row has {} values but the header names {} columns",
                values.len(),
                self.columns
            )));
        }
        let cells: Vec<String> = values.iter().map(|&v| fmt_f64(v)).collect();
        self.lines.push(cells.join(","));
        Ok(())
    }

    /// Render the finished table.
    pub fn finish(mut self) -> String {
        self.lines.push(String::new());
        self.lines.join("\n")
    }
}

/// Machine-readable run manifest: ordered `key=value` lines.
pub struct Manifest {
    lines: Vec<String>,
}

impl Manifest {
    /// Start a manifest for the named scenario.
    pub fn new(scenario: &str) -> Manifest {
        Manifest {
            lines: vec![
                "# run manifest".to_string(),
                format!("scenario={scenario}"),
            ],
        }
    }

    /// Append one key=value entry.
    pub fn set(&mut self, key: &str, value: impl Display) {
        self.lines.push(format!("{key}={value}"));
    }

    /// Render the manifest.
    pub fn finish(mut self) -> String {
        self.lines.push(String::new());
        self.lines.join("\n")
    }
}
