//! Rendering of command results as CSV, JSON or an aligned text table.

use clap::ValueEnum;
use serde_json::{Map, Value};
use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Csv,
    Json,
    Table,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Missing,
}

impl Cell {
    /// Floats carry 17 significant digits so a CSV round-trips exactly.
    fn render(&self) -> String {
        match self {
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Missing => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub command: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Scalars shown above the table and as top-level JSON keys.
    pub summary: Vec<(&'static str, Cell)>,
    /// Structured results that only the JSON form carries in full.
    pub details: Vec<(&'static str, Value)>,
}

impl Report {
    pub fn new<S: ToString>(command: &'static str, columns: &[S]) -> Self {
        Report { command, columns: columns.iter().map(ToString::to_string).collect(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, emit: Emit, w: &mut dyn Write) -> io::Result<()> {
        match emit {
            Emit::Csv => self.write_csv(w),
            Emit::Json => {
                serde_json::to_writer_pretty(&mut *w, &self.to_json())?;
                writeln!(w)
            }
            Emit::Table => self.write_table(w),
        }
    }

    fn write_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::render))?;
        }
        out.flush()
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> =
            self.rows.iter().map(|r| Value::Object(self.columns.iter().zip(r).map(|(c, v)| (c.clone(), v.json())).collect())).collect();
        let mut top = Map::new();
        top.insert("command".into(), Value::from(self.command));
        for (k, v) in &self.summary {
            top.insert(k.to_string(), v.json());
        }
        for (k, v) in &self.details {
            top.insert(k.to_string(), v.clone());
        }
        top.insert("rows".into(), Value::Array(rows));
        Value::Object(top)
    }

    fn write_table(&self, w: &mut dyn Write) -> io::Result<()> {
        for (k, v) in &self.summary {
            let s = v.render();
            writeln!(w, "{k}: {}", if s.is_empty() { "n/a" } else { &s })?;
        }
        let cells: Vec<Vec<String>> =
            self.rows.iter().map(|r| r.iter().map(|c| if *c == Cell::Missing { "n/a".to_string() } else { c.render() }).collect()).collect();
        let widths: Vec<usize> =
            (0..self.columns.len()).map(|j| cells.iter().map(|r| r[j].chars().count()).chain([self.columns[j].len()]).max().unwrap_or(0)).collect();
        let line = |items: Vec<&str>| -> String {
            items.iter().zip(&widths).map(|(s, &n)| format!("{s:>n$}")).collect::<Vec<_>>().join("  ").trim_end().to_string()
        };
        writeln!(w, "{}", line(self.columns.iter().map(String::as_str).collect()))?;
        for r in &cells {
            writeln!(w, "{}", line(r.iter().map(String::as_str).collect()))?;
        }
        Ok(())
    }
}
