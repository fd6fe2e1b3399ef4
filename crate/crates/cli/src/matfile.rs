//! Plain-text complex matrix files.
//!
//! ```text
//! 2 2
//! 1 0    0.3 -0.1
//! 0.3 0.1    1 0
//! ```
//!
//! The first line holds `rows cols`; then come `rows · cols` row-major
//! `re im` pairs separated by any whitespace. Writing uses the shortest
//! decimal that parses back to the same double, so a write/read round trip
//! is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use mimo_charexp::{ComplexMatrix, C64};

use crate::report::format_f64;
use crate::CliError;

/// Parses matrix text; `origin` names the source in error messages.
pub fn parse_matrix(text: &str, origin: &str) -> Result<ComplexMatrix, CliError> {
    let err = |m: String| CliError::Config(format!("{origin}: {m}"));
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| err("empty matrix file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| err(format!("bad dimension `{t}` in header `{header}`")))
        })
        .collect::<Result<_, _>>()?;
    let [rows, cols] = dims[..] else {
        return Err(err(format!("header must be `rows cols`, got `{header}`")));
    };
    if rows == 0 || cols == 0 {
        return Err(err(format!("matrix dimensions must be positive, got {rows}x{cols}")));
    }
    let numbers: Vec<f64> = lines
        .flat_map(str::split_whitespace)
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("bad number `{t}`")))
        })
        .collect::<Result<_, _>>()?;
    if numbers.len() != 2 * rows * cols {
        return Err(err(format!(
            "expected {} numbers for a {rows}x{cols} complex matrix, found {}",
            2 * rows * cols,
            numbers.len()
        )));
    }
    let data = numbers.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect();
    ComplexMatrix::from_vec(rows, cols, data).map_err(|e| err(e.to_string()))
}

/// Reads a matrix file.
pub fn read_matrix(path: &Path) -> Result<ComplexMatrix, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_matrix(&text, &path.display().to_string())
}

/// Formats a matrix: one line per row, pairs separated by two spaces.
pub fn format_matrix(m: &ComplexMatrix) -> String {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = m
            .row(i)
            .iter()
            .map(|z| format!("{} {}", format_f64(z.re), format_f64(z.im)))
            .collect();
        let _ = writeln!(out, "{}", row.join("  "));
    }
    out
}

/// Writes a matrix file.
pub fn write_matrix(path: &Path, m: &ComplexMatrix) -> Result<(), CliError> {
    std::fs::write(path, format_matrix(m)).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}
