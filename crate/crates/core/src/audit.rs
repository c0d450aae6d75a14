//! Structural check bookkeeping shared by the decomposition, grouping and
//! anchor stages.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub checked: usize,
    pub violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first: Option<String>,
}

/// Named pass/fail counters plus measured maxima.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Audit {
    pub checks: Vec<Check>,
    pub measured: BTreeMap<String, f64>,
}

impl Audit {
    pub fn new() -> Self {
        Self::default()
    }

    fn slot(&mut self, name: &str) -> &mut Check {
        if let Some(pos) = self.checks.iter().position(|c| c.name == name) {
            return &mut self.checks[pos];
        }
        self.checks.push(Check { name: name.to_string(), checked: 0, violations: 0, first: None });
        self.checks.last_mut().unwrap()
    }

    /// Records one evaluation of the check `name`. `detail` runs only on failure.
    pub fn record(&mut self, name: &str, ok: bool, detail: impl FnOnce() -> String) {
        let c = self.slot(name);
        c.checked += 1;
        if !ok {
            c.violations += 1;
            if c.first.is_none() {
                c.first = Some(detail());
            }
        }
    }

    /// Keeps the maximum of all values recorded under `name`.
    pub fn measure_max(&mut self, name: &str, value: f64) {
        let e = self.measured.entry(name.to_string()).or_insert(f64::NEG_INFINITY);
        if value > *e {
            *e = value;
        }
    }

    pub fn measure_min(&mut self, name: &str, value: f64) {
        let e = self.measured.entry(name.to_string()).or_insert(f64::INFINITY);
        if value < *e {
            *e = value;
        }
    }

    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn violations_of(&self, name: &str) -> usize {
        self.checks.iter().find(|c| c.name == name).map_or(0, |c| c.violations)
    }

    pub fn merge(&mut self, other: Audit) {
        for c in other.checks {
            let s = self.slot(&c.name);
            s.checked += c.checked;
            s.violations += c.violations;
            if s.first.is_none() {
                s.first = c.first;
            }
        }
        for (k, v) in other.measured {
            match self.measured.get(&k) {
                Some(&old) if k.starts_with("min ") && old <= v => {}
                Some(&old) if !k.starts_with("min ") && old >= v => {}
                _ => {
                    self.measured.insert(k, v);
                }
            }
        }
    }

    /// Fails with the first violated check.
    pub fn into_result(self) -> Result<Self> {
        if let Some(c) = self.checks.iter().find(|c| c.violations > 0) {
            return Err(Error::invariant(format!(
                "{}: {} of {} failed, first: {}",
                c.name,
                c.violations,
                c.checked,
                c.first.as_deref().unwrap_or("?")
            )));
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_and_fails() {
        let mut a = Audit::new();
        a.record("tiling", true, || unreachable!());
        a.record("tiling", false, || "square 3".into());
        a.record("tiling", false, || "square 4".into());
        a.measure_max("neighbors", 5.0);
        a.measure_max("neighbors", 3.0);
        assert_eq!(a.violations(), 2);
        assert_eq!(a.measured["neighbors"], 5.0);
        let err = a.into_result().unwrap_err();
        assert!(err.to_string().contains("tiling: 2 of 3 failed, first: square 3"));
    }

    #[test]
    fn merge_respects_min_and_max_names() {
        let mut a = Audit::new();
        a.measure_min("min ratio", 0.5);
        a.measure_max("gang size", 3.0);
        let mut b = Audit::new();
        b.measure_min("min ratio", 0.25);
        b.measure_max("gang size", 2.0);
        b.record("x", true, String::new);
        a.merge(b);
        assert_eq!(a.measured["min ratio"], 0.25);
        assert_eq!(a.measured["gang size"], 3.0);
        assert_eq!(a.checks[0].checked, 1);
    }
}
