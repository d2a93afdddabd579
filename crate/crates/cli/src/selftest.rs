//! Built-in corpus run: every named subspace plus a seeded random family.

use hardy_blh::corpus::{self, Evaluation};
use serde::Serialize;

use crate::pipeline::{ANGLE_TOL, FORMULA_TOL, IDENTITY_TOL};
use crate::{Settings, Toolkit};

pub const RANDOM_COUNT: usize = 20;
pub const RANDOM_SEED: u64 = 2024;

#[derive(Debug, Clone, Serialize)]
pub struct Entry {
    pub label: String,
    pub evaluation: Option<Evaluation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub toolkit: Toolkit,
    pub entries: Vec<Entry>,
    pub passed: bool,
}

fn passes(e: &Evaluation, tol: Option<f64>) -> bool {
    let id = tol.unwrap_or(IDENTITY_TOL);
    e.certified
        && [e.intertwining, e.theta_isometry, e.phi_commutation, e.compressed_symbol, e.rebuild_invariance, e.wold]
            .iter()
            .all(|&r| r < id)
        && e.phi_agreement < tol.unwrap_or(FORMULA_TOL)
        && e.rebuild_angle < tol.unwrap_or(ANGLE_TOL)
}

pub fn selftest(settings: &Settings) -> SelftestReport {
    let mut entries = corpus::standard();
    entries.extend(corpus::random_two_generator(RANDOM_COUNT, RANDOM_SEED));
    if let Some(m) = settings.margin {
        entries.iter_mut().for_each(|e| e.working_margin = m);
    }
    let entries: Vec<Entry> = corpus::evaluate_all(&entries, settings.exec)
        .into_iter()
        .zip(&entries)
        .map(|(r, entry)| {
            let label = entry.label.clone();
            match r {
                Ok(e) => Entry { label, passed: passes(&e, settings.tolerance), evaluation: Some(e), error: None },
                Err(err) => Entry { label, evaluation: None, error: Some(err.to_string()), passed: false },
            }
        })
        .collect();
    SelftestReport { toolkit: Toolkit::current(), passed: entries.iter().all(|e| e.passed), entries }
}
