//! CSV output: header row, `.` decimals, 17 significant digits, LF endings.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Cell {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Cell {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Cell {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Cell {
        Cell::Text(x)
    }
}

pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug)]
pub struct SchemaError {
    pub row: usize,
    pub expected: usize,
    pub found: usize,
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "row {} has {} fields, header has {}", self.row, self.found, self.expected)
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, SchemaError> {
        let mut out = String::new();
        out.push_str(&self.header.iter().map(|h| quote(h)).collect::<Vec<_>>().join(","));
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.header.len() {
                return Err(SchemaError {
                    row: i,
                    expected: self.header.len(),
                    found: row.len(),
                });
            }
            for (j, c) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                match c {
                    Cell::Int(v) => write!(out, "{v}").unwrap(),
                    Cell::Real(v) => out.push_str(&format_real(*v)),
                    Cell::Text(s) => out.push_str(&quote(s)),
                }
            }
            out.push('\n');
        }
        Ok(out)
    }
}

/// Writes `table` to `path`, or to stdout when `path` is `None`.
pub fn write_table(table: &Table, path: Option<&Path>) -> io::Result<Vec<u8>> {
    let text = table
        .to_csv()
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
    match path {
        Some(p) => fs::write(p, &text).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    Ok(text.into_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_and_zero_rows() {
        let mut t = Table::new(&["a", "b"]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n");
        t.push(vec![0.0.into(), 0usize.into()]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n0.0000000000000000e0,0\n");
    }

    #[test]
    fn reals_round_trip_and_text_is_quoted() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02e23] {
            assert_eq!(format_real(x).parse::<f64>().unwrap(), x);
        }
        let mut t = Table::new(&["s"]);
        t.push(vec!["a,\"b\"".into()]);
        assert_eq!(t.to_csv().unwrap(), "s\n\"a,\"\"b\"\"\"\n");
        t.push(vec![]);
        assert!(t.to_csv().is_err());
    }
}
