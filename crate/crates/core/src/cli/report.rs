//! Tabular reports rendered as aligned text, CSV or JSON.
//!
//! Real numbers are rounded to 12 significant digits when a [`Cell`] is
//! built, so every format prints the same value.

use std::fmt::Write as _;

use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

/// Rounds to 12 significant digits. Negative zero becomes zero.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Shortest decimal text for an already rounded value, switching to
/// exponent notation outside `[1e-5, 1e15)`.
pub fn format_real(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let a = x.abs();
    if (1e-5..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Real(f64),
    Complex(f64, f64),
    Bool(bool),
}

impl Cell {
    pub fn real(x: f64) -> Self {
        Cell::Real(round12(x))
    }

    pub fn complex(re: f64, im: f64) -> Self {
        Cell::Complex(round12(re), round12(im))
    }

    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    pub fn int(i: impl TryInto<i64>) -> Self {
        Cell::Int(i.try_into().unwrap_or(i64::MAX))
    }

    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => format_real(*x),
            Cell::Complex(re, im) => format!("({}, {})", format_real(*re), format_real(*im)),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        let num = |x: f64| serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Int(i) => Value::from(*i),
            Cell::Real(x) => num(*x),
            Cell::Complex(re, im) => Value::Array(vec![num(*re), num(*im)]),
            Cell::Bool(b) => Value::Bool(*b),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Section {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    /// A two-column `quantity, value` section.
    pub fn key_values(name: impl Into<String>, pairs: Vec<(&str, Cell)>) -> Self {
        let mut s = Self::new(name, &["quantity", "value"]);
        for (k, v) in pairs {
            s.row(vec![Cell::text(k), v]);
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub command: String,
    pub sections: Vec<Section>,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Self { command: command.into(), sections: Vec::new() }
    }

    pub fn push(&mut self, section: Section) {
        self.sections.push(section);
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.table(),
            Format::Csv => self.csv(),
            Format::Json => self.json(),
        }
    }

    fn table(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let cells: Vec<Vec<String>> = s.rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect();
            let widths: Vec<usize> = (0..s.columns.len())
                .map(|c| {
                    cells.iter().map(|r| r[c].chars().count()).chain([s.columns[c].chars().count()]).max().unwrap_or(0)
                })
                .collect();
            let line = |out: &mut String, items: &[String]| {
                let padded: Vec<String> =
                    items.iter().zip(&widths).map(|(item, &w)| format!("{item:<w$}")).collect();
                let _ = writeln!(out, "{}", padded.join("  ").trim_end());
            };
            let _ = writeln!(out, "[{}]", s.name);
            line(&mut out, &s.columns);
            line(&mut out, &widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>());
            for r in &cells {
                line(&mut out, r);
            }
        }
        out
    }

    /// One CSV block per section, each with its own header, separated by a
    /// blank line.
    fn csv(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["section".to_string()];
            header.extend(s.columns.iter().cloned());
            w.write_record(&header).expect("in-memory write");
            for r in &s.rows {
                let mut record = vec![s.name.clone()];
                record.extend(r.iter().map(Cell::render));
                w.write_record(&record).expect("in-memory write");
            }
            let bytes = w.into_inner().expect("in-memory flush");
            out.push_str(std::str::from_utf8(&bytes).expect("csv output is utf-8"));
        }
        out
    }

    fn json(&self) -> String {
        let mut sections = Map::new();
        for s in &self.sections {
            let rows = s
                .rows
                .iter()
                .map(|r| {
                    Value::Object(s.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect::<Map<_, _>>())
                })
                .collect();
            sections.insert(s.name.clone(), Value::Array(rows));
        }
        let mut root = Map::new();
        root.insert("command".into(), Value::String(self.command.clone()));
        root.insert("sections".into(), Value::Object(sections));
        let mut text = serde_json::to_string_pretty(&Value::Object(root)).expect("json values serialize");
        text.push('\n');
        text
    }
}
