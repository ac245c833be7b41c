//! Records with a fixed key order, written as JSON-lines or CSV.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    JsonLines,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::JsonLines => "jsonl",
            Format::Csv => "csv",
        }
    }

    pub fn infer(path: &str) -> Format {
        if path.ends_with(".csv") {
            Format::Csv
        } else {
            Format::JsonLines
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    UInt(u64),
    Float(f64),
    Str(String),
    Ints(Vec<i64>),
    Floats(Vec<f64>),
    Strs(Vec<String>),
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<Option<f64>> for Value {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Value::Null, Value::Float)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::UInt(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Str(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Str(v)
    }
}

impl From<Vec<f64>> for Value {
    fn from(v: Vec<f64>) -> Self {
        Value::Floats(v)
    }
}

impl From<&[f64]> for Value {
    fn from(v: &[f64]) -> Self {
        Value::Floats(v.to_vec())
    }
}

impl From<Vec<i64>> for Value {
    fn from(v: Vec<i64>) -> Self {
        Value::Ints(v)
    }
}

impl From<&[i64]> for Value {
    fn from(v: &[i64]) -> Self {
        Value::Ints(v.to_vec())
    }
}

impl From<Vec<String>> for Value {
    fn from(v: Vec<String>) -> Self {
        Value::Strs(v)
    }
}

/// 17 significant digits, so every `f64` round-trips.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

impl Value {
    fn json(&self) -> String {
        match self {
            Value::Null => "null".into(),
            Value::Bool(b) => b.to_string(),
            Value::Int(i) => i.to_string(),
            Value::UInt(i) => i.to_string(),
            Value::Float(x) => float(*x),
            Value::Str(s) => json_str(s),
            Value::Ints(v) => format!("[{}]", v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")),
            Value::Floats(v) => format!("[{}]", v.iter().map(|x| float(*x)).collect::<Vec<_>>().join(",")),
            Value::Strs(v) => format!("[{}]", v.iter().map(|s| json_str(s)).collect::<Vec<_>>().join(",")),
        }
    }

    fn cell(&self) -> String {
        match self {
            Value::Null => String::new(),
            Value::Bool(b) => b.to_string(),
            Value::Int(i) => i.to_string(),
            Value::UInt(i) => i.to_string(),
            Value::Float(x) => if x.is_finite() { float(*x) } else { String::new() },
            Value::Str(s) => s.clone(),
            Value::Ints(v) => v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";"),
            Value::Floats(v) => v.iter().map(|x| float(*x)).collect::<Vec<_>>().join(";"),
            Value::Strs(v) => v.join(";"),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Float(x) => Some(*x),
            Value::Int(i) => Some(*i as f64),
            Value::UInt(i) => Some(*i as f64),
            _ => None,
        }
    }
}

/// Ordered key/value pairs; the order is the output order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Record(pub Vec<(&'static str, Value)>);

impl Record {
    pub fn new() -> Self {
        Record::default()
    }

    pub fn with(mut self, key: &'static str, v: impl Into<Value>) -> Self {
        self.0.push((key, v.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.0.iter().find(|(k, _)| *k == key).map(|(_, v)| v)
    }

    pub fn to_json(&self, job: &str) -> String {
        let mut parts = vec![format!("\"schema\":{SCHEMA}"), format!("\"job\":{}", json_str(job))];
        parts.extend(self.0.iter().map(|(k, v)| format!("{}:{}", json_str(k), v.json())));
        format!("{{{}}}", parts.join(","))
    }
}

pub fn write_records(path: &Path, format: Format, job: &str, records: &[Record]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    match format {
        Format::JsonLines => {
            let mut w = BufWriter::new(file);
            for r in records {
                writeln!(w, "{}", r.to_json(job))?;
            }
            w.flush()?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(file);
            if let Some(first) = records.first() {
                let mut header = vec!["schema", "job"];
                header.extend(first.0.iter().map(|(k, _)| *k));
                w.write_record(&header)?;
            }
            for r in records {
                let mut row = vec![SCHEMA.to_string(), job.to_string()];
                row.extend(r.0.iter().map(|(_, v)| v.cell()));
                w.write_record(&row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_keeps_order_and_precision() {
        let r = Record::new().with("b", 2.0 / 3.0).with("a", vec![1i64, -2]).with("c", Value::Null);
        assert_eq!(
            r.to_json("j"),
            r#"{"schema":1,"job":"j","b":6.6666666666666663e-1,"a":[1,-2],"c":null}"#
        );
        let back: serde_json::Value = serde_json::from_str(&r.to_json("j")).unwrap();
        assert_eq!(back["b"].as_f64().unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn non_finite_floats_are_null() {
        assert_eq!(float(f64::NAN), "null");
        assert_eq!(Value::Floats(vec![1.0, f64::INFINITY]).json(), "[1.0000000000000000e0,null]");
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(Format::infer("out/m.csv"), Format::Csv);
        assert_eq!(Format::infer("out/m.jsonl"), Format::JsonLines);
    }
}
