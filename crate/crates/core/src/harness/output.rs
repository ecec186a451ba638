//! CSV files with a header row and a trailing `# key=value` metadata block.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::Result;

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Shortest decimal that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn flag(b: bool) -> String {
    if b { "true" } else { "false" }.to_string()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self { header: header.iter().map(|h| h.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_bytes(&self, metadata: &[(&str, String)]) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let mut bytes = w.into_inner().map_err(|e| e.into_error())?;
        for (k, v) in metadata {
            writeln!(bytes, "# {k}={v}")?;
        }
        writeln!(bytes, "# version={VERSION}")?;
        Ok(bytes)
    }

    /// Writes through a temporary file so a reader never sees a partial table.
    pub fn write(&self, path: &Path, metadata: &[(&str, String)]) -> Result<()> {
        let bytes = self.to_bytes(metadata)?;
        let tmp = path.with_extension("csv.partial");
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
        let header = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(Self { header, rows })
    }
}
