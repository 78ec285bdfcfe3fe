//! Report rows and the three output formats.

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Output, RunConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// A value with no assertion attached.
    Info,
    /// The check could not be evaluated (numerical breakdown).
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Value>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

pub fn complex(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

impl Row {
    pub fn info(name: impl Into<String>, value: Value) -> Self {
        Row { name: name.into(), value: Some(value), values: None, residual: None, tolerance: None, status: Status::Info, detail: None }
    }

    /// Passes when `residual ≤ tolerance`; NaN fails.
    pub fn residual(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        let status = if residual <= tolerance { Status::Pass } else { Status::Fail };
        Row { name: name.into(), value: None, values: None, residual: Some(residual), tolerance: Some(tolerance), status, detail: None }
    }

    /// Passes when `value > floor`.
    pub fn above(name: impl Into<String>, value: f64, floor: f64) -> Self {
        let status = if value > floor { Status::Pass } else { Status::Fail };
        Row { name: name.into(), value: Some(json!(value)), values: None, residual: None, tolerance: Some(floor), status, detail: None }
    }

    pub fn exact(name: impl Into<String>, got: Value, want: Value) -> Self {
        let status = if got == want { Status::Pass } else { Status::Fail };
        Row { name: name.into(), detail: Some(format!("expected {}", scalar(&want))), value: Some(got), values: None, residual: None, tolerance: None, status }
    }

    pub fn error(name: impl Into<String>, err: impl ToString) -> Self {
        Row { name: name.into(), value: None, values: None, residual: None, tolerance: None, status: Status::Error, detail: Some(err.to_string()) }
    }

    pub fn with_value(mut self, v: Value) -> Self {
        self.value = Some(v);
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }

    pub fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    pub args: Value,
    pub results: Vec<Row>,
    pub wall_time_ms: u64,
}

pub fn version() -> String {
    format!("{} ({})", env!("CARGO_PKG_VERSION"), env!("PREMODULAR_GIT_REV"))
}

impl Report {
    pub fn failed(&self) -> bool {
        self.results.iter().any(|r| r.status == Status::Fail)
    }

    pub fn errored(&self) -> bool {
        self.results.iter().any(|r| r.status == Status::Error)
    }

    pub fn render(&self, out: Output) -> String {
        match out {
            Output::Json => serde_json::to_string_pretty(self).expect("report serializes"),
            Output::Csv => self.csv(),
            Output::Text => self.text(),
        }
    }

    fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "value", "residual", "tolerance", "status", "detail"]).expect("in-memory write");
        for r in &self.results {
            w.write_record([
                r.name.clone(),
                cell_value(r),
                opt(r.residual),
                opt(r.tolerance),
                status_word(r.status).into(),
                r.detail.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    fn text(&self) -> String {
        let width = self.results.iter().map(|r| r.name.len()).max().unwrap_or(0);
        let mut s = format!("premodular {} :: {} [{} ms]\n", self.version, self.command, self.wall_time_ms);
        for r in &self.results {
            let mut line = format!("{:<6} {:<width$}", status_word(r.status), r.name);
            let v = cell_value(r);
            if !v.is_empty() {
                line += &format!("  {v}");
            }
            if let Some(res) = r.residual {
                line += &format!("  residual {res:.3e}");
            }
            if let Some(tol) = r.tolerance {
                line += &format!("  tol {tol:.1e}");
            }
            if let Some(d) = &r.detail {
                line += &format!("  ({d})");
            }
            s += line.trim_end();
            s.push('\n');
        }
        s
    }
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "FAIL",
        Status::Info => "info",
        Status::Error => "ERROR",
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Object(m) if m.len() == 2 && m.contains_key("re") && m.contains_key("im") => {
            let re = m["re"].as_f64().unwrap_or(f64::NAN);
            let im = m["im"].as_f64().unwrap_or(f64::NAN);
            format!("{re:e}{}{:e}i", if im < 0.0 { "-" } else { "+" }, im.abs())
        }
        other => other.to_string(),
    }
}

fn cell_value(r: &Row) -> String {
    match (&r.value, &r.values) {
        (Some(v), _) => scalar(v),
        (None, Some(vs)) => vs.iter().map(scalar).collect::<Vec<_>>().join(" "),
        (None, None) => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statuses() {
        assert_eq!(Row::residual("a", 1e-9, 1e-8).status, Status::Pass);
        assert_eq!(Row::residual("a", f64::NAN, 1e-8).status, Status::Fail);
        assert_eq!(Row::above("a", 1e-3, 1e-4).status, Status::Pass);
        assert_eq!(Row::exact("a", json!(1), json!(2)).status, Status::Fail);
    }

    #[test]
    fn complex_cells() {
        assert_eq!(scalar(&complex(Complex64::new(1.5, -2.0))), "1.5e0-2e0i");
    }
}
