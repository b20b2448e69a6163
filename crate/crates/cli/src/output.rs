//! In-memory artifacts and the single collector that writes them.
//!
//! Scenarios build every file before anything touches the disk, so a failed
//! run leaves no partial output directory behind.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::manifest::{Kind, Manifest};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Shortest representation that round-trips: deterministic and exact.
            Cell::Num(x) => write!(f, "{x:?}"),
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
        Cell::Int(i as u64)
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

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn render(&self, hash: &str) -> Result<Vec<u8>> {
        let mut buf = format!("# manifest-sha256: {hash}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let io = |e: csv::Error| CliError::Manifest(format!("csv encoding: {e}"));
            w.write_record(&self.header).map_err(io)?;
            for row in &self.rows {
                w.write_record(row.iter().map(|c| c.to_string())).map_err(io)?;
            }
            w.flush().map_err(|e| CliError::io(Path::new("<csv buffer>"), e))?;
        }
        Ok(buf)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Content {
    Csv(Table),
    Text(String),
}

/// Files produced by one command, in write order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub files: Vec<(String, Content)>,
    /// Human-readable summary printed to stdout and saved as `summary.txt`.
    pub summary: String,
}

impl Artifacts {
    pub fn csv(&mut self, name: &str, table: Table) {
        self.files.push((name.to_string(), Content::Csv(table)));
    }

    pub fn text(&mut self, name: &str, body: impl Into<String>) {
        self.files.push((name.to_string(), Content::Text(body.into())));
    }

    pub fn line(&mut self, line: impl AsRef<str>) {
        self.summary.push_str(line.as_ref());
        self.summary.push('\n');
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.files.iter().find_map(|(n, c)| match c {
            Content::Csv(t) if n == name => Some(t),
            _ => None,
        })
    }

    /// Writes everything under `dir`, echoing the resolved manifest first.
    pub fn write(&self, dir: &Path, manifest: &Manifest, kind: Kind) -> Result<Vec<PathBuf>> {
        let hash = manifest.hash(kind);
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut written = Vec::new();
        let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
            written.push(path);
            Ok(())
        };
        let echo = format!(
            "# command: {}\n# manifest-sha256: {hash}\n{}",
            kind.as_str(),
            manifest.canonical()
        );
        put("manifest.toml", echo.as_bytes())?;
        for (name, content) in &self.files {
            match content {
                Content::Csv(t) => put(name, &t.render(&hash)?)?,
                Content::Text(s) => put(name, s.as_bytes())?,
            }
        }
        put("summary.txt", self.summary.as_bytes())?;
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_starts_with_hash_then_header() {
        let mut t = Table::new(&["b", "alpha1"]);
        t.push(vec![(-0.5).into(), 0.1.into()]);
        t.push(vec![1e-300.into(), f64::NAN.into()]);
        let s = String::from_utf8(t.render("abc").unwrap()).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines, ["# manifest-sha256: abc", "b,alpha1", "-0.5,0.1", "1e-300,NaN"]);
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1 + 0.2, -3.0, 1.0 / 3.0, 6.02e23] {
            assert_eq!(Cell::Num(x).to_string().parse::<f64>().unwrap(), x);
        }
    }
}
