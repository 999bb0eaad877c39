//! Named, seeded experiments with deterministic CSV and JSON reports.
//!
//! Replicas run in parallel and are collected in replica order, so every
//! aggregate is independent of the worker count.

mod appendix;
mod coalescence;
mod endpoint;
mod independence;
mod marginals;
mod queueing_fuzz;

use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::stats::TestReport;

pub use appendix::{run_appendix_bounds, AppendixConfig};
pub use coalescence::{run_coalescence, CoalescenceConfig};
pub use endpoint::{run_endpoint_scaling, EndpointExperimentConfig};
pub use independence::{run_independence, IndependenceConfig};
pub use marginals::{run_marginals, MarginalsConfig};
pub use queueing_fuzz::{run_queueing_fuzz, QueueingFuzzConfig, MIN_FIRST_GAP};

/// One asserted property of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestEntry {
    pub name: String,
    pub statistic: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub n: usize,
    pub pass: bool,
}

impl TestEntry {
    /// Hypothesis test that passes when the null is not rejected.
    pub fn from_report(name: impl Into<String>, r: &TestReport) -> Self {
        Self {
            name: name.into(),
            statistic: r.statistic,
            p_value: Some(r.p_value),
            alpha: Some(r.alpha),
            lower: None,
            upper: None,
            n: r.n,
            pass: r.pass,
        }
    }

    /// Control test that passes when the null is rejected.
    pub fn rejects(name: impl Into<String>, r: &TestReport) -> Self {
        Self { pass: !r.pass, ..Self::from_report(name, r) }
    }

    /// Statistic required to lie in `[lower, upper]`.
    pub fn range(name: impl Into<String>, statistic: f64, lower: f64, upper: f64, n: usize) -> Self {
        Self {
            name: name.into(),
            statistic,
            p_value: None,
            alpha: None,
            lower: Some(lower),
            upper: Some(upper),
            n,
            pass: statistic >= lower && statistic <= upper,
        }
    }

    /// Statistic at most `upper`.
    pub fn at_most(name: impl Into<String>, statistic: f64, upper: f64, n: usize) -> Self {
        Self { lower: None, pass: statistic <= upper, ..Self::range(name, statistic, f64::NEG_INFINITY, upper, n) }
    }

    /// Statistic at least `lower`.
    pub fn at_least(name: impl Into<String>, statistic: f64, lower: f64, n: usize) -> Self {
        Self { upper: None, pass: statistic >= lower, ..Self::range(name, statistic, lower, f64::INFINITY, n) }
    }
}

/// Report of one experiment run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub params: Value,
    /// CSV header: the keys of every cell, in order.
    pub columns: Vec<String>,
    pub cells: Vec<Map<String, Value>>,
    pub tests: Vec<TestEntry>,
    pub notes: Vec<String>,
    pub pass: bool,
    #[serde(skip)]
    pub runtime: Option<Duration>,
}

impl ExperimentResult {
    pub(crate) fn new(experiment: &str, params: Value, columns: &[&str]) -> Self {
        Self {
            experiment: experiment.to_string(),
            params,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            cells: Vec::new(),
            tests: Vec::new(),
            notes: Vec::new(),
            pass: false,
            runtime: None,
        }
    }

    /// Appends a cell; every column must be present.
    pub(crate) fn push_cell(&mut self, cell: Value) {
        let Value::Object(map) = cell else { panic!("cells are JSON objects") };
        debug_assert!(
            self.columns.iter().all(|c| map.contains_key(c)) && map.len() == self.columns.len(),
            "cell keys {:?} do not match columns {:?}",
            map.keys().collect::<Vec<_>>(),
            self.columns
        );
        self.cells.push(map);
    }

    pub(crate) fn finish(mut self, runtime: Duration) -> Self {
        self.pass = !self.tests.is_empty() && self.tests.iter().all(|t| t.pass);
        self.runtime = Some(runtime);
        self
    }

    pub fn failing_tests(&self) -> impl Iterator<Item = &TestEntry> {
        self.tests.iter().filter(|t| !t.pass)
    }

    /// One row per cell under the fixed header; `null` becomes an empty field.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).map_err(csv_err)?;
        for cell in &self.cells {
            let rec: Vec<String> = self.columns.iter().map(|c| field_text(cell.get(c).unwrap_or(&Value::Null))).collect();
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Input(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Input(format!("csv: {e}")))
    }

    /// Pretty JSON with the schema `experiment, params, columns, cells[],
    /// tests[], notes[], pass`.
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Input(format!("json: {e}")))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Input(format!("csv: {e}"))
}

fn field_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Runs `f` for replicas `0..count` in parallel and returns results in
/// replica order.
pub(crate) fn par_replicas<T: Send>(count: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..count as u64).into_par_iter().map(f).collect()
}

/// JSON number, or `null` for non-finite values.
pub(crate) fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn csv_has_fixed_header_and_lf_endings() {
        let mut r = ExperimentResult::new("demo", json!({"seed": 1}), &["a", "b"]);
        r.push_cell(json!({"a": 1.5, "b": "x"}));
        r.push_cell(json!({"a": num(f64::NAN), "b": "y,z"}));
        r.tests.push(TestEntry::range("ratio", 2.0, 1.3, 2.8, 10));
        let r = r.finish(Duration::from_millis(5));
        assert!(r.pass);
        assert_eq!(r.to_csv().unwrap(), "a,b\n1.5,x\n,\"y,z\"\n");
        let j = r.to_json().unwrap();
        assert!(!j.contains("runtime"));
        let back: ExperimentResult = serde_json::from_str(&j).unwrap();
        assert_eq!(back.cells, r.cells);
    }

    #[test]
    fn empty_test_list_does_not_pass() {
        let r = ExperimentResult::new("demo", json!({}), &[]).finish(Duration::ZERO);
        assert!(!r.pass);
    }
}
