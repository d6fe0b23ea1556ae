//! Tabular output and its CSV serialization.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// `x` with `digits` significant digits in scientific notation. Exact
/// ties round to even.
pub fn format_number(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{:.*e}", digits.max(1) - 1, x)
}

fn render(cell: &Cell, digits: usize) -> String {
    match cell {
        Cell::Num(x) => format_number(*x, digits),
        Cell::Int(i) => i.to_string(),
        Cell::Text(s) => s.clone(),
    }
}

/// Writes `table` as comma-separated text with a header row and LF line
/// ends.
pub fn write_csv(table: &Table, path: &Path, precision: usize) -> Result<()> {
    let io = |e: csv::Error| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(io)?;
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| render(c, precision))).map_err(io)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_round_to_even() {
        assert_eq!(format_number(1.125, 3), "1.12e0");
        assert_eq!(format_number(1.375, 3), "1.38e0");
        assert_eq!(format_number(2.5, 1), "2e0");
        assert_eq!(format_number(-3.5, 1), "-4e0");
        assert_eq!(format_number(0.1, 9), "1.00000000e-1");
    }

    #[test]
    fn empty_table_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&Table::new(&["a", "b"]), &path, 9).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n");
    }

    #[test]
    fn rewriting_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(&["x", "label", "n"]);
        t.push(vec![Cell::Num(1.0 / 3.0), "has,comma".into(), 3usize.into()]);
        t.push(vec![Cell::Num(-2e-12), "plain".into(), 4usize.into()]);
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_csv(&t, &a, 4).unwrap();
        write_csv(&t, &b, 4).unwrap();
        let text = std::fs::read(&a).unwrap();
        assert_eq!(text, std::fs::read(&b).unwrap());
        assert_eq!(
            String::from_utf8(text).unwrap(),
            "x,label,n\n3.333e-1,\"has,comma\",3\n-2.000e-12,plain,4\n"
        );
    }
}
