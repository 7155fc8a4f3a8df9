//! Verification reports: bit-stable JSON and a plain text rendering.
//!
//! Object keys come out sorted because `serde_json::Map` is a `BTreeMap`.
//! Floats are written as `%.12e` and stored already rounded, so
//! `Report::from_json(&r.to_json()) == r`.

use serde_json::{Map, Number, Value};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use supercocycle_core::{Error, Result};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
        }
    }
}

/// Printed normal form of an exact residual, or a numeric magnitude.
#[derive(Clone, Debug, PartialEq)]
pub enum Residual {
    Exact(String),
    Numeric(f64),
}

impl Residual {
    /// A numeric residual rounded to what the JSON can carry.
    pub fn numeric(x: f64) -> Residual {
        if x.is_finite() {
            Residual::Numeric(fmt_e12(x).parse().expect("formatted float"))
        } else {
            Residual::Exact(format!("{x}"))
        }
    }
    pub fn zero() -> Residual {
        Residual::Exact("0".into())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub id: String,
    pub anchor: String,
    pub status: Status,
    pub residual: Residual,
    pub elapsed_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub schema_version: u64,
    pub suite: String,
    pub seed: u64,
    pub count: u64,
    pub checks: Vec<Check>,
    /// Computed objects in printed normal form; omitted from JSON when empty.
    pub values: BTreeMap<String, String>,
}

/// C-style `%.12e`: twelve mantissa digits, signed two-digit exponent.
pub fn fmt_e12(x: f64) -> String {
    let s = format!("{x:.12e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let e: i32 = exp.parse().expect("integer exponent");
    format!("{mant}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

fn num(x: f64) -> Value {
    Value::Number(fmt_e12(x).parse::<Number>().expect("valid JSON number"))
}

fn bad(what: &str) -> Error {
    Error::ValidationError(format!("report: {what}"))
}

impl Report {
    pub fn new(suite: &str, seed: u64, count: u64) -> Self {
        Report { schema_version: SCHEMA_VERSION, suite: suite.into(), seed, count, checks: vec![], values: BTreeMap::new() }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status == Status::Pass)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| c.status == Status::Fail).count()
    }

    pub fn to_value(&self) -> Value {
        let checks = self
            .checks
            .iter()
            .map(|c| {
                let mut m = Map::new();
                m.insert("id".into(), Value::String(c.id.clone()));
                m.insert("anchor".into(), Value::String(c.anchor.clone()));
                m.insert("status".into(), Value::String(c.status.as_str().into()));
                m.insert(
                    "residual".into(),
                    match &c.residual {
                        Residual::Exact(s) => Value::String(s.clone()),
                        Residual::Numeric(x) => num(*x),
                    },
                );
                if let Some(t) = c.elapsed_ms {
                    m.insert("elapsed_ms".into(), num(t));
                }
                Value::Object(m)
            })
            .collect();
        let mut m = Map::new();
        m.insert("schema_version".into(), Value::from(self.schema_version));
        m.insert("suite".into(), Value::String(self.suite.clone()));
        m.insert("seed".into(), Value::from(self.seed));
        m.insert("count".into(), Value::from(self.count));
        m.insert("checks".into(), Value::Array(checks));
        if !self.values.is_empty() {
            m.insert("values".into(), Value::Object(self.values.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect()));
        }
        Value::Object(m)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("values serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Report> {
        let v: Value = crate::spec::parse_json(text)?;
        let u = |k: &str| v.get(k).and_then(Value::as_u64).ok_or_else(|| bad(k));
        let suite = v.get("suite").and_then(Value::as_str).ok_or_else(|| bad("suite"))?.to_string();
        let mut checks = Vec::new();
        for c in v.get("checks").and_then(Value::as_array).ok_or_else(|| bad("checks"))? {
            let s = |k: &str| c.get(k).and_then(Value::as_str).map(str::to_string).ok_or_else(|| bad(k));
            let status = match s("status")?.as_str() {
                "pass" => Status::Pass,
                "fail" => Status::Fail,
                _ => return Err(bad("status")),
            };
            let residual = match c.get("residual") {
                Some(Value::String(r)) => Residual::Exact(r.clone()),
                Some(Value::Number(n)) => Residual::Numeric(n.as_f64().ok_or_else(|| bad("residual"))?),
                _ => return Err(bad("residual")),
            };
            let elapsed_ms = match c.get("elapsed_ms") {
                Some(t) => Some(t.as_f64().ok_or_else(|| bad("elapsed_ms"))?),
                None => None,
            };
            checks.push(Check { id: s("id")?, anchor: s("anchor")?, status, residual, elapsed_ms });
        }
        let mut values = BTreeMap::new();
        if let Some(vs) = v.get("values") {
            for (k, x) in vs.as_object().ok_or_else(|| bad("values"))? {
                values.insert(k.clone(), x.as_str().ok_or_else(|| bad("values"))?.to_string());
            }
        }
        Ok(Report { schema_version: u("schema_version")?, suite, seed: u("seed")?, count: u("count")?, checks, values })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("suite {} (seed {}, count {})\n", self.suite, self.seed, self.count);
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k} = {v}");
        }
        for c in &self.checks {
            let r = match &c.residual {
                Residual::Exact(s) => s.clone(),
                Residual::Numeric(x) => fmt_e12(*x),
            };
            let _ = write!(out, "{:4}  {:<32} residual {}", c.status.as_str().to_uppercase(), c.id, r);
            if let Some(t) = c.elapsed_ms {
                let _ = write!(out, "  ({t:.1} ms)");
            }
            let _ = writeln!(out, "\n      {}", c.anchor);
        }
        let _ = writeln!(out, "{} checks, {} failed", self.checks.len(), self.failures());
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

/// Write a report to `path`, or to stdout when `path` is None.
pub fn emit_report(r: &Report, format: Format, path: Option<&std::path::Path>) -> Result<()> {
    let body = match format {
        Format::Json => r.to_json(),
        Format::Text => r.to_text(),
    };
    match path {
        Some(p) => std::fs::write(p, body).map_err(|e| Error::IoError(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout().lock().write_all(body.as_bytes()).map_err(|e| Error::IoError(e.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_style_exponent() {
        assert_eq!(fmt_e12(0.0), "0.000000000000e+00");
        assert_eq!(fmt_e12(1.5e-7), "1.500000000000e-07");
        assert_eq!(fmt_e12(-123456.0), "-1.234560000000e+05");
    }
}
