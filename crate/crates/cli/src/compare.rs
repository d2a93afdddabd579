//! Two-scenario comparisons: coincidence of multiplier tuples, nested
//! factorization and uniqueness of the inner function.

use std::time::Instant;

use hardy_blh::classify::{self, Outcome};
use hardy_blh::{par, subspace};
use serde::Serialize;
use serde_json::{json, Value};

use crate::pipeline::{self, RunReport, State};
use crate::scenario::Scenario;
use crate::{CliError, Settings, Status, Toolkit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Constant unitary conjugating one multiplier tuple onto the other.
    Coincide,
    /// First subspace inside the second, with the factor between their inner functions.
    Nested,
    /// Constant unitary relating two inner functions with the same range.
    Tau,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareTiming {
    pub total_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub toolkit: Toolkit,
    pub mode: Mode,
    pub a: RunReport,
    pub b: RunReport,
    pub outcome: Option<Outcome>,
    pub certificate: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<CompareTiming>,
}

fn certify(mode: Mode, a: &mut State, b: &mut State, settings: &Settings) -> Result<(Outcome, Value), String> {
    pipeline::complete(a, settings).map_err(|e| format!("first scenario: {e}"))?;
    pipeline::complete(b, settings).map_err(|e| format!("second scenario: {e}"))?;
    let (pa, pb) = (a.phis.as_ref().expect("completed"), b.phis.as_ref().expect("completed"));
    let (ta, tb) = (a.theta.as_ref().expect("completed"), b.theta.as_ref().expect("completed"));
    match mode {
        Mode::Coincide => {
            let cert = classify::coincide(pa, pb).map_err(|e| e.to_string())?;
            Ok((cert.outcome, serde_json::to_value(&cert).expect("certificates serialize")))
        }
        Mode::Tau => {
            let cert = classify::uniqueness_tau(ta, tb).map_err(|e| e.to_string())?;
            Ok((cert.outcome, serde_json::to_value(&cert).expect("certificates serialize")))
        }
        Mode::Nested => {
            let (sa, sb) = (a.subspace.as_ref().expect("built"), b.subspace.as_ref().expect("built"));
            let containment = subspace::containment_residual(sa, sb).map_err(|e| e.to_string())?;
            let trusted = sa.grade().trusted_degree();
            let cert = classify::nested_factor(ta, tb, pa, pb, trusted).map_err(|e| e.to_string())?;
            let outcome = if cert.nested { Outcome::Certified } else { Outcome::Rejected };
            let mut v = serde_json::to_value(&cert).expect("certificates serialize");
            v["containment_residual"] = json!(containment);
            Ok((outcome, v))
        }
    }
}

fn check_compatible(mode: Mode, a: &Scenario, b: &Scenario, settings: &Settings) -> Result<(), CliError> {
    let (ga, gb) = (a.working_grade(settings), b.working_grade(settings));
    let ok = match mode {
        Mode::Coincide => ga.n == gb.n,
        Mode::Nested | Mode::Tau => ga == gb,
    };
    if ok {
        Ok(())
    } else {
        Err(CliError::Input(format!(
            "mode {mode:?} needs compatible grades: '{}' works on {ga:?}, '{}' on {gb:?}",
            a.label, b.label
        )))
    }
}

/// Runs both pipelines (concurrently when parallel) and certifies the pair.
pub fn compare(a: &Scenario, b: &Scenario, mode: Mode, settings: &Settings) -> Result<(CompareReport, Status), CliError> {
    check_compatible(mode, a, b, settings)?;
    let start = Instant::now();
    let (ra, rb) = par::join(settings.exec, || pipeline::run(a, settings), || pipeline::run(b, settings));
    let (report_a, mut state_a) = ra?;
    let (report_b, mut state_b) = rb?;
    let runs_passed = report_a.passed && report_b.passed;
    let (outcome, certificate, error) = if runs_passed {
        match certify(mode, &mut state_a, &mut state_b, settings) {
            Ok((o, v)) => (Some(o), v, None),
            Err(e) => (None, Value::Null, Some(e)),
        }
    } else {
        (None, Value::Null, Some("a pipeline failed; no certificate computed".into()))
    };
    let status = match outcome {
        Some(Outcome::Certified) => Status::Pass,
        Some(Outcome::Indeterminate) => Status::Indeterminate,
        Some(Outcome::Rejected) | None => Status::Fail,
    };
    let report = CompareReport {
        toolkit: Toolkit::current(),
        mode,
        a: report_a,
        b: report_b,
        outcome,
        certificate,
        error,
        passed: status == Status::Pass,
        timing: settings.timing.then(|| CompareTiming { total_ms: start.elapsed().as_secs_f64() * 1e3 }),
    };
    Ok((report, status))
}
