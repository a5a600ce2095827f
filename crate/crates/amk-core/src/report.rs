//! Structured results of numerical checks.
//!
//! Every check carries its measured value and the tolerance it was judged
//! against, so reports are self-describing: no tolerance is applied
//! silently.

use serde::Serialize;

/// A named measured quantity.
#[derive(Debug, Clone, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
}

/// A single pass/fail judgment with its bounds echoed.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    pub passed: bool,
}

impl Check {
    /// `value <= hi`.
    pub fn le(name: &str, value: f64, hi: f64) -> Self {
        Self { name: name.into(), value, lo: None, hi: Some(hi), passed: value <= hi }
    }

    /// `lo <= value <= hi`.
    pub fn in_band(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), value, lo: Some(lo), hi: Some(hi), passed: (lo..=hi).contains(&value) }
    }

    /// A boolean condition reported with an indicator value.
    pub fn flag(name: &str, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, lo: None, hi: None, passed: ok }
    }
}

/// Structured result of a diagnostic or certificate computation.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub title: String,
    /// Echo of every parameter and tolerance that shaped the run.
    pub config: serde_json::Value,
    pub metrics: Vec<Metric>,
    pub checks: Vec<Check>,
    /// Optional free-form verdict (used by compactness diagnostics).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    /// Command-specific payload (tables, per-band data).
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

impl Report {
    pub fn new(title: &str) -> Self {
        Self {
            title: title.into(),
            config: serde_json::Value::Null,
            metrics: Vec::new(),
            checks: Vec::new(),
            verdict: None,
            extra: serde_json::Value::Null,
        }
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.push(Metric { name: name.into(), value });
    }

    pub fn metric_value(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).map(|m| m.value)
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn check_value(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// All checks passed (a report with no checks is vacuously passing).
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Names of failing checks, for error messages and exit codes.
    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} = {:.6e}", c.name, c.value))
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report json");
        v["passed"] = serde_json::Value::Bool(self.passed());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_judge_and_serialize() {
        let mut r = Report::new("t");
        r.metric("x", 2.0);
        r.check(Check::le("small", 1e-12, 1e-10));
        r.check(Check::in_band("ratio", 3.0, 0.1, 10.0));
        assert!(r.passed());
        r.check(Check::in_band("bad", 30.0, 0.1, 10.0));
        assert!(!r.passed());
        assert_eq!(r.failures().len(), 1);
        let j = r.to_json();
        assert_eq!(j["passed"], serde_json::Value::Bool(false));
        assert_eq!(j["checks"][0]["name"], "small");
        assert_eq!(r.metric_value("x"), Some(2.0));
    }
}
