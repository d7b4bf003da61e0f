//! Verdict records for numeric inequality audits.

use serde::{Deserialize, Serialize};

/// Relative slack used when judging `lhs ≤ rhs`.
pub const AUDIT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Verified,
    VerifiedUpToBound,
    Violated,
    NotApplicable,
}

/// One audited inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditVerdict {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub verdict: Verdict,
    pub detail: String,
}

fn within(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + AUDIT_SLACK * rhs.abs().max(1.0)
}

impl AuditVerdict {
    pub fn compare(name: &str, lhs: f64, rhs: f64, detail: impl Into<String>) -> Self {
        let verdict = if lhs.is_nan() || rhs.is_nan() {
            Verdict::Violated
        } else if within(lhs, rhs) {
            Verdict::Verified
        } else {
            Verdict::Violated
        };
        Self { name: name.into(), lhs, rhs, verdict, detail: detail.into() }
    }

    /// `lhs` is only known to lie in [lo, hi]: verified when hi passes, up to bound when
    /// only lo passes.
    pub fn interval(name: &str, lo: f64, hi: f64, rhs: f64, detail: impl Into<String>) -> Self {
        let verdict = if within(hi, rhs) {
            Verdict::Verified
        } else if within(lo, rhs) {
            Verdict::VerifiedUpToBound
        } else {
            Verdict::Violated
        };
        let detail = format!("{} lhs in [{lo:.12e}, {hi:.12e}]", detail.into());
        Self { name: name.into(), lhs: hi, rhs, verdict, detail }
    }

    pub fn not_applicable(name: &str, lhs: f64, rhs: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), lhs, rhs, verdict: Verdict::NotApplicable, detail: detail.into() }
    }

    pub fn is_violated(&self) -> bool {
        self.verdict == Verdict::Violated
    }

    /// Verified or verified up to an interval bound.
    pub fn passed(&self) -> bool {
        matches!(self.verdict, Verdict::Verified | Verdict::VerifiedUpToBound)
    }
}
