//! Pass/fail reports of the verification harness.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClauseStatus {
    Pass,
    Fail,
    /// Not evaluated, typically because a precondition does not hold.
    Skipped,
}

impl ClauseStatus {
    pub fn label(&self) -> &'static str {
        match self {
            ClauseStatus::Pass => "PASS",
            ClauseStatus::Fail => "FAIL",
            ClauseStatus::Skipped => "SKIP",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub name: String,
    pub status: ClauseStatus,
    /// Allowed minus observed; negative when the clause fails.
    pub margin: f64,
    pub worst_time: Option<f64>,
    pub worst_seed: Option<u64>,
    pub detail: String,
}

impl Clause {
    /// Passes when `observed <= allowed`.
    pub fn bound(name: &str, observed: f64, allowed: f64) -> Self {
        let pass = observed <= allowed;
        Self {
            name: name.to_string(),
            status: if pass { ClauseStatus::Pass } else { ClauseStatus::Fail },
            margin: allowed - observed,
            worst_time: None,
            worst_seed: None,
            detail: format!("observed {observed:.6e}, allowed {allowed:.6e}"),
        }
    }

    pub fn skipped(name: &str, why: &str) -> Self {
        Self {
            name: name.to_string(),
            status: ClauseStatus::Skipped,
            margin: 0.0,
            worst_time: None,
            worst_seed: None,
            detail: why.to_string(),
        }
    }

    pub fn at_time(mut self, t: Option<f64>) -> Self {
        self.worst_time = t;
        self
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.worst_seed = seed;
        self
    }

    pub fn with_detail(mut self, extra: &str) -> Self {
        if !extra.is_empty() {
            self.detail = format!("{}; {extra}", self.detail);
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.status != ClauseStatus::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub title: String,
    pub clauses: Vec<Clause>,
}

impl VerificationReport {
    pub fn new(title: &str) -> Self {
        Self {
            title: title.to_string(),
            clauses: Vec::new(),
        }
    }

    pub fn push(&mut self, c: Clause) {
        self.clauses.push(c);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        for mut c in other.clauses {
            c.name = format!("{}/{}", other.title, c.name);
            self.clauses.push(c);
        }
    }

    pub fn clause(&self, name: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.name == name)
    }

    /// No clause failed.
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(Clause::passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("== {} ==\n", self.title);
        for c in &self.clauses {
            let _ = write!(s, "[{}] {}: {}", c.status.label(), c.name, c.detail);
            if c.status != ClauseStatus::Skipped {
                let _ = write!(s, " (margin {:.3e})", c.margin);
            }
            if let Some(t) = c.worst_time {
                let _ = write!(s, " worst at t = {t:.6}");
            }
            if let Some(seed) = c.worst_seed {
                let _ = write!(s, " worst seed {seed}");
            }
            s.push('\n');
        }
        let _ = writeln!(s, "overall: {}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_and_json() {
        let mut r = VerificationReport::new("demo");
        r.push(Clause::bound("ok", 1.0, 2.0).at_time(Some(0.5)));
        r.push(Clause::bound("bad", 3.0, 2.0).with_seed(Some(7)));
        r.push(Clause::skipped("gated", "precondition false"));
        assert!(!r.passed());
        let text = r.to_text();
        assert!(text.contains("[PASS] ok") && text.contains("[FAIL] bad"));
        assert!(text.contains("worst seed 7") && text.contains("[SKIP] gated"));
        let back: VerificationReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.clause("bad").unwrap().margin, -1.0);
    }
}
