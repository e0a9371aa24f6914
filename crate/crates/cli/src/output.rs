//! Deterministic CSV and JSON emission.

use crate::{Common, Failure, Format};
use std::io::Write;

/// C-style `%.12e`: two-digit signed exponent.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let e: i32 = exp.parse().expect("integer exponent");
    let sign = if e < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", e.abs())
}

pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => sci(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(x) if x.is_finite() => serde_json::json!(x),
            Cell::Num(_) => serde_json::Value::Null,
            Cell::Int(n) => serde_json::json!(n),
            Cell::Text(s) => serde_json::json!(s),
        }
    }
}

/// A table with `#` header lines and optional footer lines.
pub struct Table {
    pub kind: &'static str,
    pub header: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub footer: Vec<(String, Cell)>,
}

impl Table {
    pub fn new(kind: &'static str, common: &Common, columns: Vec<&'static str>) -> Self {
        let header = vec![
            ("command".to_string(), kind.to_string()),
            ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("alpha".to_string(), sci(common.alpha)),
            ("omega".to_string(), sci(common.omega)),
            ("tol".to_string(), sci(common.tol)),
        ];
        Self { kind, header, columns, rows: Vec::new(), footer: Vec::new() }
    }

    pub fn note(&mut self, key: &str, value: impl Into<String>) {
        self.header.push((key.to_string(), value.into()));
    }

    fn csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.header {
            s.push_str(&format!("# {k}: {v}\n"));
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(Cell::csv).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        for (k, v) in &self.footer {
            s.push_str(&format!("# {k}: {}\n", v.csv()));
        }
        s
    }

    fn json(&self) -> String {
        let mut meta = serde_json::Map::new();
        for (k, v) in &self.header {
            meta.insert(k.clone(), serde_json::json!(v));
        }
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut m = serde_json::Map::new();
                for (c, v) in self.columns.iter().zip(r) {
                    m.insert(c.to_string(), v.json());
                }
                serde_json::Value::Object(m)
            })
            .collect();
        let mut summary = serde_json::Map::new();
        for (k, v) in &self.footer {
            summary.insert(k.clone(), v.json());
        }
        let doc = serde_json::json!({
            "schema": 1,
            "kind": self.kind,
            "meta": meta,
            "rows": rows,
            "summary": summary,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv(),
            Format::Json => self.json(),
        }
    }
}

pub fn emit(common: &Common, text: &str) -> Result<(), Failure> {
    match &common.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_style_exponent() {
        assert_eq!(sci(0.0), "0.000000000000e+00");
        assert_eq!(sci(-2.5e-3), "-2.500000000000e-03");
        assert_eq!(sci(1.0e123), "1.000000000000e+123");
        assert_eq!(sci(f64::NAN), "nan");
    }
}
