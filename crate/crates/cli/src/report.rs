//! Machine-readable outcome of a run: one entry per check, one measurement
//! per tolerance.

use serde::Serialize;

/// How a measured value is compared with its limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">")]
    Above,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "==")]
    Exactly,
}

impl Relation {
    fn holds(self, value: f64, limit: f64) -> bool {
        match self {
            Relation::Below => value < limit,
            Relation::Above => value > limit,
            Relation::AtLeast => value >= limit,
            Relation::Exactly => value == limit,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Below => "<",
            Relation::Above => ">",
            Relation::AtLeast => ">=",
            Relation::Exactly => "==",
        }
    }
}

/// One value tested against one tolerance. NaN never passes.
#[derive(Clone, Debug, Serialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub limit: f64,
    pub passed: bool,
}

impl Measurement {
    pub fn describe(&self) -> String {
        format!("{} = {:.4e} (need {} {:.4e})", self.name, self.value, self.relation.symbol(), self.limit)
    }
}

/// Outcome of one check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub check: String,
    /// Short tag of the mathematical property exercised.
    pub property: String,
    pub passed: bool,
    pub measurements: Vec<Measurement>,
    pub details: serde_json::Value,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, property: impl Into<String>) -> Self {
        Self {
            check: check.into(),
            property: property.into(),
            passed: true,
            measurements: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn require(&mut self, name: impl Into<String>, value: f64, relation: Relation, limit: f64) -> bool {
        let passed = relation.holds(value, limit);
        self.passed &= passed;
        self.measurements.push(Measurement { name: name.into(), value, relation, limit, passed });
        passed
    }

    pub fn below(&mut self, name: impl Into<String>, value: f64, limit: f64) -> bool {
        self.require(name, value, Relation::Below, limit)
    }

    pub fn at_least(&mut self, name: impl Into<String>, value: f64, limit: f64) -> bool {
        self.require(name, value, Relation::AtLeast, limit)
    }

    pub fn with_details(mut self, details: serde_json::Value) -> Self {
        self.details = details;
        self
    }

    pub fn failures(&self) -> impl Iterator<Item = &Measurement> {
        self.measurements.iter().filter(|m| !m.passed)
    }

    /// `PASS name` or `FAIL name: <failing measurements>`.
    pub fn summary(&self) -> String {
        if self.passed {
            format!("PASS {} ({} measurements)", self.check, self.measurements.len())
        } else {
            let failing: Vec<String> = self.failures().map(Measurement::describe).collect();
            format!("FAIL {}: {}", self.check, failing.join("; "))
        }
    }
}

/// Outcome of one CLI invocation.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub seed: u64,
    pub passed: bool,
    /// `check: measurement` for every failed tolerance.
    pub failing: Vec<String>,
    pub checks: Vec<CheckReport>,
    /// Files written, relative to the output directory.
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn new(command: impl Into<String>, seed: u64, checks: Vec<CheckReport>, artifacts: Vec<String>) -> Self {
        let failing: Vec<String> = checks
            .iter()
            .flat_map(|c| c.failures().map(move |m| format!("{}: {}", c.check, m.name)))
            .collect();
        let passed = checks.iter().all(|c| c.passed);
        Self { command: command.into(), seed, passed, failing, checks, artifacts }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations_and_nan() {
        let mut r = CheckReport::new("demo", "none");
        assert!(r.below("a", 1.0, 2.0));
        assert!(r.at_least("b", 2.0, 2.0));
        assert!(r.require("c", 0.0, Relation::Exactly, 0.0));
        assert!(r.passed);
        assert!(!r.below("d", f64::NAN, 1.0));
        assert!(!r.passed);
        assert!(r.summary().starts_with("FAIL demo: d = NaN"));
        let run = RunReport::new("check", 0, vec![r], vec![]);
        assert_eq!(run.failing, ["demo: d"]);
        assert!(!run.passed);
    }

    #[test]
    fn relation_symbols_serialize() {
        assert_eq!(serde_json::to_string(&Relation::AtLeast).unwrap(), "\">=\"");
    }
}
