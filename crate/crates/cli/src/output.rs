//! Tables rendered as aligned text, CSV or a JSON envelope.

use serde_json::{json, Map, Value};

use smallball::fmt17;

/// Version of the JSON envelope.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

/// A command result: named columns plus free-form metadata.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub meta: Vec<(&'static str, Cell)>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: &'static str, value: impl Into<Cell>) {
        self.meta.push((key, value.into()));
    }

    pub fn render(&self, format: Format, command: &str) -> String {
        match format {
            Format::Table => self.text(),
            Format::Csv => self.csv(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json(command)).expect("json");
                s.push('\n');
                s
            }
        }
    }

    fn text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}: {}\n", text_cell(v)));
        }
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(text_cell).collect())
            .collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|j| {
                cells
                    .iter()
                    .map(|r| r[j].chars().count())
                    .chain(std::iter::once(self.columns[j].len()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |items: Vec<String>| {
            items
                .iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        out.push_str(&line(self.columns.iter().map(|c| c.to_string()).collect()));
        out.push('\n');
        for r in cells {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }

    fn csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.iter().map(csv_cell).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    fn json(&self, command: &str) -> Value {
        let meta: Map<String, Value> = self
            .meta
            .iter()
            .map(|(k, v)| (k.to_string(), json_cell(v)))
            .collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                Value::Object(
                    self.columns
                        .iter()
                        .zip(r)
                        .map(|(c, v)| (c.to_string(), json_cell(v)))
                        .collect(),
                )
            })
            .collect();
        json!({
            "version": SCHEMA_VERSION,
            "command": command,
            "meta": meta,
            "rows": rows,
        })
    }
}

/// Six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-3..6).contains(&mag) {
        format!("{x:.*}", (5 - mag) as usize)
    } else {
        format!("{x:.5e}")
    }
}

fn text_cell(c: &Cell) -> String {
    match c {
        Cell::Int(i) => i.to_string(),
        Cell::Num(x) => sig6(*x),
        Cell::Text(s) => s.clone(),
        Cell::Bool(b) => if *b { "PASS" } else { "FAIL" }.to_string(),
        Cell::Empty => "-".to_string(),
    }
}

fn csv_cell(c: &Cell) -> String {
    match c {
        Cell::Int(i) => i.to_string(),
        Cell::Num(x) => fmt17(*x),
        Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s.clone(),
        Cell::Bool(b) => b.to_string(),
        Cell::Empty => String::new(),
    }
}

fn json_cell(c: &Cell) -> Value {
    match c {
        Cell::Int(i) => json!(i),
        // serde_json writes the shortest string that round-trips exactly.
        Cell::Num(x) if x.is_finite() => json!(x),
        Cell::Num(_) | Cell::Empty => Value::Null,
        Cell::Text(s) => json!(s),
        Cell::Bool(b) => json!(b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.10132118364233778), "0.101321");
        assert_eq!(sig6(1234.56789), "1234.57");
        assert_eq!(sig6(5.864429528e-6), "5.86443e-6");
        assert_eq!(sig6(-2.5), "-2.50000");
    }

    #[test]
    fn csv_keeps_full_precision() {
        let mut t = Table::new(vec!["k", "mu"]);
        t.push(vec![1usize.into(), 0.1f64.into()]);
        let s = t.render(Format::Csv, "x");
        let v: f64 = s.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, 0.1);
    }

    #[test]
    fn json_envelope_has_version() {
        let t = Table::new(vec!["a"]);
        let v: Value = serde_json::from_str(&t.render(Format::Json, "eigs")).unwrap();
        assert_eq!(v["version"], SCHEMA_VERSION);
        assert_eq!(v["command"], "eigs");
    }
}
