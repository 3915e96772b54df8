//! Pass/fail records and tabular outputs shared by the commands and the
//! acceptance target.

use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cmp {
    /// value ≤ bound
    AtMost,
    /// value ≥ bound
    AtLeast,
    /// value == bound
    Equal,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub cmp: Cmp,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, cmp: Cmp::AtMost, passed: value <= bound }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, cmp: Cmp::AtLeast, passed: value >= bound }
    }

    pub fn equal(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, cmp: Cmp::Equal, passed: value == bound }
    }

    /// A boolean property, recorded as 1/0 against 1.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::equal(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }

    /// A check that could not be evaluated.
    pub fn failed(name: impl Into<String>) -> Self {
        Check { name: name.into(), value: f64::NAN, bound: f64::NAN, cmp: Cmp::Equal, passed: false }
    }

    pub fn to_json(&self) -> Value {
        let op = match self.cmp {
            Cmp::AtMost => "<=",
            Cmp::AtLeast => ">=",
            Cmp::Equal => "==",
        };
        json!({
            "name": self.name,
            "value": num(self.value),
            "op": op,
            "bound": num(self.bound),
            "passed": self.passed,
        })
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let op = match self.cmp {
            Cmp::AtMost => "<=",
            Cmp::AtLeast => ">=",
            Cmp::Equal => "==",
        };
        let mark = if self.passed { "ok" } else { "FAIL" };
        write!(f, "{mark:4} {} = {:.6e} {op} {:.6e}", self.name, self.value, self.bound)
    }
}

/// JSON number (shortest round-trip form); non-finite values become strings.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::String(format!("{x}"))
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Everything one experiment produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    /// Scalar results for the manifest, in insertion order.
    pub results: Vec<(String, Value)>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn result(&mut self, key: impl Into<String>, v: Value) {
        self.results.push((key.into(), v));
    }

    pub fn merge(&mut self, other: Outcome) {
        self.checks.extend(other.checks);
        self.tables.extend(other.tables);
        self.results.extend(other.results);
    }
}
