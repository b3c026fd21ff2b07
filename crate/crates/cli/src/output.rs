use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use leo_sg::units::fmt_f64;
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(u64),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::I(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::F(v) => fmt_f64(*v),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            // non-finite floats have no JSON form
            Cell::F(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::I(v) => Value::from(*v),
            Cell::S(s) => Value::from(s.as_str()),
        }
    }
}

/// Rows under a fixed, ordered header.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub fn render(table: &Table, config: &[(String, String)], format: Format) -> io::Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&table.columns)?;
            for row in &table.rows {
                w.write_record(row.iter().map(Cell::text))?;
            }
            w.into_inner().map_err(|e| e.into_error())
        }
        Format::Json => {
            let cfg: Map<String, Value> = config.iter().map(|(k, v)| (k.clone(), Value::from(v.as_str()))).collect();
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| Value::Object(table.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.json())).collect()))
                .collect();
            let mut doc = Map::new();
            doc.insert("config".into(), Value::Object(cfg));
            doc.insert("rows".into(), Value::Array(rows));
            let mut out = serde_json::to_vec_pretty(&Value::Object(doc))?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

pub fn emit(table: &Table, config: &[(String, String)], format: Format, out: Option<&Path>) -> io::Result<()> {
    let bytes = render(table, config, format)?;
    match out {
        Some(p) => File::create(p)?.write_all(&bytes),
        None => io::stdout().lock().write_all(&bytes),
    }
}
