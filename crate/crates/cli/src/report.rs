use ncdomain::fock::matrix_to_rows;
use ncdomain::linalg::{CMat, C64};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    pub inputs: Value,
    pub results: Value,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

/// Collects named checks of the form `value <= threshold` (or `>=`).
#[derive(Default)]
pub struct Checks {
    items: Vec<Assertion>,
}

impl Checks {
    pub fn at_most(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        let passed = value <= threshold;
        self.items.push(Assertion { name: name.into(), value, threshold, passed });
    }

    pub fn at_least(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        let passed = value >= threshold;
        self.items.push(Assertion { name: name.into(), value, threshold, passed });
    }

    /// A boolean check, reported as `value = 1` against `threshold = 1`.
    pub fn holds(&mut self, name: impl Into<String>, ok: bool) {
        let value = if ok { 1.0 } else { 0.0 };
        self.items.push(Assertion { name: name.into(), value, threshold: 1.0, passed: ok });
    }

    pub fn prefixed(&mut self, prefix: &str, other: Checks) {
        for mut a in other.items {
            a.name = format!("{prefix}.{}", a.name);
            self.items.push(a);
        }
    }

    pub fn into_report(self, command: &str, inputs: Value, results: Value) -> Report {
        let passed = self.items.iter().all(|a| a.passed);
        Report {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs,
            results,
            assertions: self.items,
            passed,
        }
    }
}

pub fn complex(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn matrix(m: &CMat) -> Value {
    json!(matrix_to_rows(m))
}
