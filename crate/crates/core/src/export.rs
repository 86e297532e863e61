//! Numeric CSV tables. Floats use Rust's shortest round-trip formatting, so
//! a table re-parses to the same values and is byte-stable across runs.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{AqpuError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(AqpuError::Dimension(format!("row has {} values, header has {} columns", row.len(), self.header.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| AqpuError::Io(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_and_checks_width() {
        let mut t = CsvTable::new(["length", "epsilon"]);
        t.push(vec![3.0, 0.1 + 0.2]).unwrap();
        t.push(vec![4.0, 1e-300]).unwrap();
        assert!(t.push(vec![1.0]).is_err());
        let text = t.to_csv();
        assert!(text.starts_with("length,epsilon\n3,"));
        let back: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(back, vec![3.0, 0.1 + 0.2]);
        assert_eq!(t.column("epsilon").unwrap()[1], 1e-300);
    }
}
