use std::fmt::Write as _;

use clap::ValueEnum;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Bool(bool),
    Text(String),
    Null,
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

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<nnsql::Scalar> for Cell {
    fn from(v: nnsql::Scalar) -> Self {
        match v {
            nnsql::Scalar::Null => Cell::Null,
            nnsql::Scalar::Int(i) => Cell::Int(i),
            nnsql::Scalar::Real(f) => Cell::Real(f),
            nnsql::Scalar::Bool(b) => Cell::Bool(b),
            nnsql::Scalar::Text(s) => Cell::Text(s),
        }
    }
}

/// `%.17g`: enough digits to round-trip any double.
pub fn g17(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let fixed = format!("{v:.*}", (16 - exp) as usize);
    if fixed.contains('.') {
        fixed.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        fixed
    }
}

impl Cell {
    fn text(&self, precise: bool) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(f) if precise => g17(*f),
            Cell::Real(f) => f.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Real(f) if f.is_finite() => serde_json::Value::from(*f),
            Cell::Real(_) | Cell::Null => Value::Null,
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn from_result(name: &str, result: nnsql::ResultTable) -> Self {
        Table { name: name.into(), columns: result.columns, rows: result.rows.into_iter().map(|r| r.into_iter().map(Cell::from).collect()).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub max_abs_delta: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn ok(&self) -> bool {
        self.max_abs_delta <= self.tolerance
    }
}

#[derive(Debug, Default)]
pub struct Report {
    pub tables: Vec<Table>,
    pub check: Option<Check>,
    /// Printed verbatim instead of the tables.
    pub raw: Option<String>,
}

impl Report {
    pub fn single(table: Table) -> Self {
        Report { tables: vec![table], ..Default::default() }
    }

    pub fn render(&self, format: Format) -> String {
        if let Some(raw) = &self.raw {
            return raw.clone();
        }
        let mut out = String::new();
        match format {
            Format::Json => {
                let tables: Vec<Value> = self
                    .tables
                    .iter()
                    .map(|t| {
                        json!({
                            "name": t.name,
                            "columns": t.columns,
                            "rows": t.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                let check = self.check.as_ref().map(|c| {
                    json!({
                        "max_abs_delta": Cell::Real(c.max_abs_delta).json(),
                        "tolerance": Cell::Real(c.tolerance).json(),
                        "ok": c.ok(),
                    })
                });
                out = serde_json::to_string_pretty(&json!({ "tables": tables, "check": check })).expect("json");
                out.push('\n');
            }
            Format::Csv => {
                let many = self.tables.len() > 1;
                for (i, t) in self.tables.iter().enumerate() {
                    if many {
                        if i > 0 {
                            out.push('\n');
                        }
                        let _ = writeln!(out, "# {}", t.name);
                    }
                    let _ = writeln!(out, "{}", t.columns.join(","));
                    for r in &t.rows {
                        let _ = writeln!(out, "{}", r.iter().map(|c| c.text(true)).collect::<Vec<_>>().join(","));
                    }
                }
            }
            Format::Table => {
                for (i, t) in self.tables.iter().enumerate() {
                    if i > 0 {
                        out.push('\n');
                    }
                    if self.tables.len() > 1 {
                        let _ = writeln!(out, "{}:", t.name);
                    }
                    render_aligned(&mut out, t);
                }
                if let Some(c) = &self.check {
                    let _ = writeln!(
                        out,
                        "\ncheck: max abs delta {} ({})",
                        g17(c.max_abs_delta),
                        if c.ok() { "ok" } else { "MISMATCH" }
                    );
                }
            }
        }
        out
    }
}

fn render_aligned(out: &mut String, t: &Table) {
    let cells: Vec<Vec<String>> = t.rows.iter().map(|r| r.iter().map(|c| c.text(false)).collect()).collect();
    let widths: Vec<usize> = (0..t.columns.len())
        .map(|i| cells.iter().map(|r| r[i].len()).chain([t.columns[i].len()]).max().unwrap_or(0))
        .collect();
    let line = |vals: Vec<&str>| {
        vals.iter().zip(&widths).map(|(v, w)| format!("{v:>w$}")).collect::<Vec<_>>().join("  ")
    };
    let _ = writeln!(out, "{}", line(t.columns.iter().map(String::as_str).collect()));
    for r in &cells {
        let _ = writeln!(out, "{}", line(r.iter().map(String::as_str).collect()));
    }
}
