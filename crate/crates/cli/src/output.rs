//! Tabular data files and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::Format;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Cell::Int(v.into())
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // 17 significant digits
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Empty => Value::Null,
        }
    }
}

/// A data table with `#` comment lines documenting units and conventions.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub notes: Vec<String>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { notes: Vec::new(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn note(mut self, line: impl Into<String>) -> Self {
        self.notes.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for n in &self.notes {
            let _ = writeln!(s, "# {n}");
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        let doc = serde_json::json!({ "notes": self.notes, "columns": self.columns, "rows": rows });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }

    /// Write as `<dir>/<stem>.csv` or `.json`; returns the path.
    pub fn write(&self, dir: &Path, stem: &str, format: Format) -> std::io::Result<PathBuf> {
        let (ext, body) = match format {
            Format::Csv => ("csv", self.to_csv()),
            Format::Json => ("json", self.to_json()),
        };
        let path = dir.join(format!("{stem}.{ext}"));
        std::fs::write(&path, body)?;
        Ok(path)
    }
}

/// One invariant check recorded in the manifest.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self { name: name.into(), value, bound: format!("<= {tol:e}"), pass: value <= tol }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), value, bound: format!("in [{lo}, {hi}]"), pass: (lo..=hi).contains(&value) }
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> std::io::Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    s.push('\n');
    std::fs::write(path, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b", "c"]).note("unit: none");
        t.push(vec![0.1.into(), Cell::Int(-3), Cell::Empty]);
        t.push(vec![1.0.into(), "x,y".into(), true.into()]);
        assert_eq!(
            t.to_csv(),
            "# unit: none\na,b,c\n1.0000000000000001e-1,-3,\n1.0000000000000000e0,\"x,y\",true\n"
        );
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [std::f64::consts::PI, -1e-300, 123456.789, 0.1 + 0.2] {
            let s = Cell::Float(v).csv();
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn json_keeps_columns_and_nulls() {
        let mut t = Table::new(&["x", "y"]);
        t.push(vec![Cell::Float(f64::NAN), Cell::Empty]);
        let v: Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(v["columns"][1], "y");
        assert!(v["rows"][0][0].is_null());
    }

    #[test]
    fn checks() {
        assert!(Check::at_most("a", 1e-14, 1e-13).pass);
        assert!(!Check::within("b", 4.5, 3.6, 4.4).pass);
    }
}
