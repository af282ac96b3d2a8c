//! Bookkeeping for the acceptance report: each criterion collects named
//! clauses and prints a single `PASS`/`FAIL` line.

use std::fmt;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "ok" } else { "FAILED" };
        write!(f, "{} [{mark}]: {}", self.label, self.detail)
    }
}

#[derive(Debug)]
pub struct Criterion {
    pub id: u8,
    pub title: String,
    pub clauses: Vec<Clause>,
    /// Measured values reported alongside the clauses but not judged.
    pub notes: Vec<String>,
    started: Instant,
    budget: Option<Duration>,
}

impl Criterion {
    pub fn new(id: u8, title: &str) -> Self {
        Self {
            id,
            title: title.to_string(),
            clauses: Vec::new(),
            notes: Vec::new(),
            started: Instant::now(),
            budget: None,
        }
    }

    /// Adds a wall-time clause checked when the criterion is finished.
    pub fn with_budget(mut self, budget: Duration) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn check(&mut self, label: &str, passed: bool, detail: impl Into<String>) -> &mut Self {
        self.clauses.push(Clause {
            label: label.to_string(),
            passed,
            detail: detail.into(),
        });
        self
    }

    /// `value < bound`, reported with both numbers.
    pub fn below(&mut self, label: &str, value: f64, bound: f64) -> &mut Self {
        self.check(label, value < bound, format!("{value:.3e} < {bound:.0e}"))
    }

    /// `value > bound`, reported with both numbers.
    pub fn above(&mut self, label: &str, value: f64, bound: f64) -> &mut Self {
        self.check(label, value > bound, format!("{value:.3e} > {bound:.0e}"))
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.notes.push(text.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    /// Closes the runtime clause and renders the report.
    pub fn finish(mut self) -> Report {
        let elapsed = self.started.elapsed();
        if let Some(budget) = self.budget {
            self.check(
                "runtime",
                elapsed < budget,
                format!("{:.2} s < {} s", elapsed.as_secs_f64(), budget.as_secs()),
            );
        }
        Report { criterion: self, elapsed }
    }
}

#[derive(Debug)]
pub struct Report {
    pub criterion: Criterion,
    pub elapsed: Duration,
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.criterion;
        let status = if c.passed() { "PASS" } else { "FAIL" };
        write!(f, "{status} criterion {} ({}) [{:.2} s]", c.id, c.title, self.elapsed.as_secs_f64())?;
        for clause in &c.clauses {
            write!(f, "\n    {clause}")?;
        }
        for note in &c.notes {
            write!(f, "\n    note: {note}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failing_clause_fails_the_criterion() {
        let mut c = Criterion::new(3, "demo");
        c.below("small", 1e-12, 1e-10).above("large", 1e-3, 1e-2);
        let report = c.finish();
        assert!(!report.criterion.passed());
        let text = report.to_string();
        assert!(text.starts_with("FAIL criterion 3 (demo)"));
        assert!(text.contains("small [ok]: 1.000e-12 < 1e-10"));
        assert!(text.contains("large [FAILED]"));
    }

    #[test]
    fn budget_is_checked() {
        let report = Criterion::new(1, "fast").with_budget(Duration::from_secs(60)).finish();
        assert!(report.criterion.passed());
        assert_eq!(report.criterion.clauses[0].label, "runtime");
    }
}
