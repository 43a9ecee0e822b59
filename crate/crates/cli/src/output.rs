use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Num(v as f64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Num(v as f64)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Header record plus a table of rows; written as CSV or JSON.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub header: Map<String, Value>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Artifact {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Artifact { header: Map::new(), columns, rows: Vec::new() }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        let v = serde_json::to_value(value).with_context(|| format!("serializing '{key}'"))?;
        self.header.insert(key.to_string(), v);
        Ok(())
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let header = round_value(Value::Object(self.header.clone()));
        let mut s = format!("# {header}\n{}\n", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => fmt_num(*v),
                    Cell::Text(t) => t.clone(),
                })
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut obj = self.header.clone();
        obj.insert("columns".into(), Value::from(self.columns.clone()));
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                Value::Array(
                    r.iter()
                        .map(|c| match c {
                            Cell::Num(v) => num_value(*v),
                            Cell::Text(t) => Value::String(t.clone()),
                        })
                        .collect(),
                )
            })
            .collect();
        obj.insert("rows".into(), Value::Array(rows));
        let mut s = serde_json::to_string_pretty(&round_value(Value::Object(obj))).expect("json");
        s.push('\n');
        s
    }

    pub fn write(&self, json: bool, out: Option<&Path>) -> Result<()> {
        let text = if json { self.to_json() } else { self.to_csv() };
        match out {
            Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                let mut so = std::io::stdout().lock();
                so.write_all(text.as_bytes()).context("writing stdout")
            }
        }
    }
}

fn round12(v: f64) -> f64 {
    format!("{v:.11e}").parse().unwrap_or(v)
}

/// 12 significant digits; non-finite values become empty cells.
pub fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        return String::new();
    }
    let r = round12(v);
    if r == 0.0 {
        return "0".into();
    }
    let a = r.abs();
    if (1e-4..1e12).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

fn num_value(v: f64) -> Value {
    if v.is_finite() {
        serde_json::Number::from_f64(round12(v)).map_or(Value::Null, Value::Number)
    } else {
        Value::Null
    }
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => num_value(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}
