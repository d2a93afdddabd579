//! Residual records with pass/fail verdicts.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub label: String,
    pub value: f64,
}

/// Residuals of one check, each compared against `tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub check: String,
    pub tolerance: f64,
    pub trusted_degree: Option<usize>,
    pub residuals: Vec<Residual>,
    pub verdict: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(check: impl Into<String>, tolerance: f64, trusted_degree: Option<usize>) -> Self {
        Report { check: check.into(), tolerance, trusted_degree, residuals: Vec::new(), verdict: true, notes: Vec::new() }
    }

    /// Records a residual; the verdict fails if it is not below tolerance.
    /// NaN residuals always fail.
    pub fn push(&mut self, label: impl Into<String>, value: f64) {
        if !(value < self.tolerance) {
            self.verdict = false;
        }
        self.residuals.push(Residual { label: label.into(), value });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.value).fold(0.0, f64::max)
    }
}
