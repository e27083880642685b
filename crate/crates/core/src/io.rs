//! CSV and JSON artifacts. CSV is comma-separated with a header line and
//! 17 significant digits, formatted without any locale dependence.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(usize),
    /// Written as an empty field.
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Real)
    }
}

/// 17 significant digits in scientific notation.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn format_cell(c: &Cell) -> String {
    match c {
        Cell::Real(x) => format_real(*x),
        Cell::Int(n) => n.to_string(),
        Cell::Missing => String::new(),
    }
}

pub fn write_csv_to<W: Write>(out: &mut W, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    writeln!(out, "{}", header.join(","))?;
    for (i, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(Error::Input(format!(
                "CSV row {i} has {} fields, header has {}",
                row.len(),
                header.len()
            )));
        }
        let fields: Vec<String> = row.iter().map(format_cell).collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::from(e).context(format!("creating {}", path.display())))?);
    write_csv_to(&mut w, header, rows)?;
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::from(e).context(format!("creating {}", path.display())))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::from(e).context(format!("writing {}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip_through_seventeen_digits() {
        for x in [0.1, 1.0 / 3.0, 2f64.powi(-14), 6.02214076e23, -1e-300, 0.0] {
            let s = format_real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            let digits: String = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).collect();
            assert_eq!(digits.len(), 17, "{s}");
        }
    }

    #[test]
    fn header_and_missing_fields() {
        let mut buf = Vec::new();
        let rows = vec![vec![Cell::Int(64), 0.5.into(), Cell::Missing]];
        write_csv_to(&mut buf, &["n", "x", "thickness"], &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "n,x,thickness\n64,5.0000000000000000e-1,\n");
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let mut buf = Vec::new();
        assert!(write_csv_to(&mut buf, &["a", "b"], &[vec![Cell::Int(1)]]).is_err());
    }
}
