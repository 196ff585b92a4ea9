//! Deterministic JSON and CSV rendering.

use serde_json::{Map, Number, Value};

pub const SCHEMA_VERSION: &str = "1.0";

/// 17 significant digits in scientific notation; non-finite values as words.
pub fn fmt(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// A JSON number carrying exactly the digits of [`fmt`]; `null` when not finite.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(fmt(x).parse::<Number>().expect("formatted float is a JSON number"))
    } else {
        Value::Null
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// Builds an object; keys are emitted in sorted order.
pub fn obj<const N: usize>(entries: [(&str, Value); N]) -> Value {
    let mut m = Map::new();
    for (k, v) in entries {
        m.insert(k.to_string(), v);
    }
    Value::Object(m)
}

#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

pub struct Output {
    pub json: Value,
    pub table: Table,
}

impl Output {
    /// Wraps a command body with the schema version and command name.
    pub fn new(command: &str, body: Value, table: Table) -> Self {
        let mut m = Map::new();
        m.insert("schema_version".into(), Value::String(SCHEMA_VERSION.into()));
        m.insert("command".into(), Value::String(command.into()));
        if let Value::Object(b) = body {
            m.extend(b);
        }
        Output { json: Value::Object(m), table }
    }
}

pub fn render_json(out: &Output) -> String {
    let mut s = serde_json::to_string_pretty(&out.json).expect("JSON values serialize");
    s.push('\n');
    s
}

pub fn render_csv(out: &Output) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&out.table.header)?;
    for r in &out.table.rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}
