//! Pass/fail certificates serialized as flat key-value text.

use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Certificate {
    pub title: String,
    pub checks: Vec<Check>,
    pub records: Vec<(String, f64)>,
}

impl Certificate {
    pub fn new(title: impl Into<String>) -> Self {
        Certificate { title: title.into(), ..Default::default() }
    }

    /// Passes when `value ≤ limit`.
    pub fn at_most(&mut self, name: &str, value: f64, limit: f64) -> &mut Self {
        let pass = value <= limit;
        self.checks.push(Check { name: name.into(), value, limit, pass });
        self
    }

    /// Passes when `value ≥ limit`.
    pub fn at_least(&mut self, name: &str, value: f64, limit: f64) -> &mut Self {
        let pass = value >= limit;
        self.checks.push(Check { name: name.into(), value, limit, pass });
        self
    }

    pub fn record(&mut self, name: &str, value: f64) -> &mut Self {
        self.records.push((name.into(), value));
        self
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.check(name)
            .map(|c| c.value)
            .or_else(|| self.records.iter().find(|(k, _)| k == name).map(|(_, v)| *v))
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[{}]", self.title);
        let _ = writeln!(s, "pass = {}", self.passed());
        for c in &self.checks {
            let _ = writeln!(s, "{}.value = {:?}", c.name, c.value);
            let _ = writeln!(s, "{}.limit = {:?}", c.name, c.limit);
            let _ = writeln!(s, "{}.pass = {}", c.name, c.pass);
        }
        for (k, v) in &self.records {
            let _ = writeln!(s, "{k} = {v:?}");
        }
        s
    }
}
