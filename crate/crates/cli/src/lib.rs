//! Scenario-driven front end for `hardy-blh`: run pipelines from JSON
//! scenario files, compare pairs of subspaces, and emit JSON reports.
//!
//! Reports are deterministic apart from their `timing` blocks, which can be
//! switched off for golden comparisons.

pub mod compare;
pub mod pipeline;
pub mod scenario;
pub mod selftest;

use hardy_blh::Execution;
use serde::Serialize;

pub use compare::{compare, CompareReport, Mode};
pub use pipeline::{run, RunReport};
pub use scenario::{Scenario, Step};

/// Default memory guard on the ambient dimension of any grade.
pub const DEFAULT_MAX_DIM: usize = 20_000;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Process exit status contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    InputError,
    Fail,
    Indeterminate,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::InputError => 1,
            Status::Fail => 2,
            Status::Indeterminate => 3,
        }
    }

    pub fn from_passed(passed: bool) -> Self {
        if passed {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    /// Overrides every default verdict tolerance that a step does not set.
    pub tolerance: Option<f64>,
    /// Overrides the scenario's working margin.
    pub margin: Option<usize>,
    pub max_dim: usize,
    /// Rebuild the orbit at margin + 1 and report whether W changed.
    pub stability: bool,
    pub timing: bool,
    pub exec: Execution,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { tolerance: None, margin: None, max_dim: DEFAULT_MAX_DIM, stability: true, timing: true, exec: Execution::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Toolkit {
    pub name: &'static str,
    pub version: &'static str,
}

impl Toolkit {
    pub fn current() -> Self {
        Toolkit { name: "hardy-blh", version: env!("CARGO_PKG_VERSION") }
    }
}

/// Pretty JSON with a trailing newline.
pub fn render<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}
