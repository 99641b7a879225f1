//! JSON check reports shared by the fiber and decomposition verifiers.

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Whether a check verifies a proven property or is an exploratory diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    /// Failure indicates a bug.
    Theorem,
    /// Failure is a finding about the underlying claim.
    Diagnostic,
}

/// `{check, kind, passed, trials, details[]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub kind: CheckKind,
    pub passed: bool,
    pub trials: usize,
    pub details: Vec<Value>,
}

impl CheckReport {
    pub fn theorem(check: &str) -> Self {
        Self::with_kind(check, CheckKind::Theorem)
    }

    pub fn diagnostic(check: &str) -> Self {
        Self::with_kind(check, CheckKind::Diagnostic)
    }

    fn with_kind(check: &str, kind: CheckKind) -> Self {
        Self {
            check: check.to_string(),
            kind,
            passed: true,
            trials: 0,
            details: Vec::new(),
        }
    }

    pub fn detail(&mut self, value: Value) {
        self.details.push(value);
    }

    /// Records a failing observation and marks the report as failed.
    pub fn fail(&mut self, value: Value) {
        self.passed = false;
        self.details.push(value);
    }
}
