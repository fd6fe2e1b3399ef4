//! CSV artifacts.
//!
//! Every table starts with one comment line recording the configuration
//! hash and the seed, followed by the header row. Numbers are printed as the
//! shortest decimal that round-trips, so equal inputs give equal bytes.
//! Fields never contain commas, quotes or newlines, so no quoting is needed.

use std::path::Path;

use crate::CliError;

/// One CSV table held in memory until it is written.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// A CSV field.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    /// A number, printed shortest-round-trip.
    Num(f64),
    /// An integer.
    Int(u64),
    /// A bare token (tags, `true`/`false`, `PASS`/`FAIL`).
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Shortest round-trip decimal of `v`: plain notation for moderate
/// magnitudes, exponent notation otherwise.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_f64(*v),
            Cell::Int(v) => v.to_string(),
            // Keep the record structure intact whatever the text holds.
            Cell::Text(s) => s.replace([',', '\n', '\r', '"'], ";"),
        }
    }
}

impl Table {
    /// Empty table with the given header.
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row; panics if its width differs from the header (a
    /// programming error, not an input error).
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row.iter().map(Cell::render).collect());
    }

    /// Number of data rows.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Whether the table has no data rows.
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// The CSV text.
    pub fn render(&self, config_hash: &str, seed: u64) -> String {
        let mut out = format!("# config_sha256={config_hash} seed={seed}\n");
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Writes `text` to `out`, or to standard output when `out` is `None`.
pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io {
                path: "<stdout>".into(),
                source: e,
            })
        }
    }
}
