//! Reporting harness for the acceptance suite.
//!
//! A [`Criterion`] groups named checks with a runtime budget. Its status line
//! reads `[PASS]` only when every check passed inside the budget.

use std::fmt;
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct Criterion {
    pub id: u32,
    pub title: String,
    pub budget: Duration,
    pub elapsed: Duration,
    pub checks: Vec<Check>,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        self.elapsed < self.budget && self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        writeln!(
            f,
            "[{tag}] criterion {}: {} ({:.2} s, budget {} s)",
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        )?;
        for c in &self.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            writeln!(f, "    {mark} {}: {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Collects checks while a criterion runs.
#[derive(Debug, Default)]
pub struct Recorder {
    checks: Vec<Check>,
}

impl Recorder {
    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    /// `|actual − expected| ≤ tol`.
    pub fn close(&mut self, name: impl Into<String>, actual: f64, expected: f64, tol: f64) {
        let err = (actual - expected).abs();
        self.check(name, err <= tol, format!("{actual:.12} vs {expected:.12}, |diff| {err:.3e} (tol {tol:.1e})"));
    }

    /// `lo ≤ actual ≤ hi`.
    pub fn within(&mut self, name: impl Into<String>, actual: f64, lo: f64, hi: f64) {
        self.check(name, (lo..=hi).contains(&actual), format!("{actual:.12} in [{lo}, {hi}]"));
    }
}

/// Runs `body`, timing it against `budget`.
pub fn run(id: u32, title: &str, budget: Duration, body: impl FnOnce(&mut Recorder)) -> Criterion {
    let mut rec = Recorder::default();
    let start = Instant::now();
    body(&mut rec);
    let elapsed = start.elapsed();
    Criterion { id, title: title.into(), budget, elapsed, checks: rec.checks }
}
