//! Pipeline execution and run reports.

use std::time::Instant;

use hardy_blh::classify;
use hardy_blh::operators;
use hardy_blh::serial::MatrixRecord;
use hardy_blh::subspace::{self, SubspaceBasis};
use hardy_blh::{blh, linalg, Grade, HardyVector, MatrixPolynomial, Report, Wandering};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::scenario::{Scenario, Step};
use crate::{CliError, Settings, Toolkit};

/// Default verdict tolerance for identities that hold exactly in the model.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Default tolerance for principal angles of rebuilt subspaces.
pub const ANGLE_TOL: f64 = 1e-8;
/// Default tolerance for agreement of the two multiplier formulas.
pub const FORMULA_TOL: f64 = 1e-12;
/// Smallest accepted ratio between the last kept and first dropped singular value.
pub const MIN_DEFECT_GAP: f64 = 1e6;
const PURITY_STEPS: usize = 16;

#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub index: usize,
    pub step: String,
    /// SHA-256 over the scenario header, this step's options and the previous digest.
    pub input_digest: String,
    pub outputs: Value,
    pub checks: Vec<Report>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MarginRun {
    pub working_margin: usize,
    pub dim_s: usize,
    pub dim_w: usize,
    pub certified: bool,
}

/// Orbit rebuilt with one extra unit of working margin; a change in the
/// wandering dimension or certification raises the flag without failing.
#[derive(Debug, Clone, Serialize)]
pub struct Stability {
    pub runs: [MarginRun; 2],
    pub stable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub total_ms: f64,
    pub steps_ms: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub toolkit: Toolkit,
    pub label: String,
    pub grade: Grade,
    pub working_grade: Grade,
    pub working_margin: usize,
    pub generators: Vec<String>,
    pub steps: Vec<StepRecord>,
    pub stability: Option<Stability>,
    pub passed: bool,
    /// Wall-clock data; the only nondeterministic part of the report.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

/// Objects produced by a pipeline, reused by `compare`.
#[derive(Debug, Clone, Default)]
pub struct State {
    pub subspace: Option<SubspaceBasis>,
    pub wandering: Option<Wandering>,
    pub theta: Option<MatrixPolynomial>,
    pub phis: Option<Vec<MatrixPolynomial>>,
}

struct Ctx<'a> {
    settings: &'a Settings,
    grade: Grade,
    working: Grade,
    trusted: Option<usize>,
}

impl Ctx<'_> {
    /// Step option first, then `--tolerance`, then the check's default.
    fn tol(&self, step: &Step, default: f64) -> f64 {
        step.tolerance().or(self.settings.tolerance).unwrap_or(default)
    }

    fn trusted(&self, step: &Step) -> usize {
        step.trusted_degree().or(self.trusted).unwrap_or(0)
    }
}

fn check(name: &str, tolerance: f64, trusted: Option<usize>, residuals: impl IntoIterator<Item = (String, f64)>) -> Report {
    let mut r = Report::new(name, tolerance, trusted);
    for (label, v) in residuals {
        r.push(label, v);
    }
    r
}

/// Re-judges a library report against `tolerance`.
fn rejudge(r: &Report, tolerance: f64) -> Report {
    let mut out = check(&r.check, tolerance, r.trusted_degree, r.residuals.iter().map(|x| (x.label.clone(), x.value)));
    out.notes = r.notes.clone();
    out
}

fn poly_json(p: &MatrixPolynomial) -> Value {
    serde_json::to_value(p).expect("matrix polynomials serialize")
}

fn digest(header: &[u8], step: &Step, prev: &str) -> String {
    let mut h = Sha256::new();
    h.update(header);
    h.update(serde_json::to_vec(step).expect("steps serialize"));
    h.update(prev.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn missing(what: &str) -> hardy_blh::Error {
    hardy_blh::Error::Degenerate(format!("{what} unavailable after an earlier failure"))
}

fn run_step(step: &Step, ctx: &Ctx, gens: &[HardyVector], state: &mut State) -> hardy_blh::Result<(Value, Vec<Report>)> {
    let exec = ctx.settings.exec;
    let s = || state.subspace.as_ref().ok_or_else(|| missing("subspace"));
    let w = || state.wandering.as_ref().ok_or_else(|| missing("wandering subspace"));
    let theta = || state.theta.as_ref().ok_or_else(|| missing("Θ"));
    let phis = || state.phis.as_ref().ok_or_else(|| missing("multipliers"));
    let trusted_opt = ctx.trusted;
    Ok(match step {
        Step::Build => {
            let margin = ctx.working.outer_cap - ctx.grade.outer_cap;
            let built = subspace::orbit_span(gens, ctx.grade, margin, exec)?;
            let out = json!({ "dim_s": built.dim(), "ambient_dim": ctx.working.ambient_dim() });
            state.subspace = Some(built);
            (out, Vec::new())
        }
        Step::Invariance { .. } => {
            let s = s()?;
            let rep = subspace::check_invariant(s, &operators::model_tuple(ctx.working))?;
            let labels = axis_labels(ctx.working.n);
            let c = check(
                "joint_invariance",
                ctx.tol(step, IDENTITY_TOL),
                trusted_opt,
                labels.iter().cloned().zip(rep.safe_residuals.iter().copied()),
            );
            (json!({ "safe_slice_dim": rep.safe_slice_dim, "full_residuals": rep.full_residuals }), vec![c])
        }
        Step::Wandering { .. } => {
            let wd = subspace::wandering_subspace(s()?)?;
            let suspect = wd.suspect.iter().filter(|&&x| x).count();
            let c = check("wandering_top_band", ctx.tol(step, IDENTITY_TOL), trusted_opt, [("top_band_mass".to_string(), wd.top_band_mass)]);
            let out = json!({ "dim_w": wd.dim(), "suspect": suspect, "certified": wd.certified() });
            state.wandering = Some(wd);
            (out, vec![c])
        }
        Step::Wold { .. } => {
            let rep = subspace::wold_reconstruction(s()?, w()?)?;
            (Value::Null, vec![rejudge(&rep, ctx.tol(step, IDENTITY_TOL))])
        }
        Step::ExtractTheta { force } => {
            let t = blh::extract_theta(s()?, w()?, *force)?;
            let out = json!({ "effective_degree": t.effective_degree(IDENTITY_TOL), "theta": poly_json(&t) });
            state.theta = Some(t);
            (out, Vec::new())
        }
        Step::Isometry { .. } => {
            let rep = blh::is_isometric_multiplier(theta()?, None);
            (Value::Null, vec![rejudge(&rep, ctx.tol(step, IDENTITY_TOL))])
        }
        Step::ExtractPhi { .. } => {
            let (s, w) = (s()?, w()?);
            let ps = blh::extract_phi_all(s, w, exec)?;
            let top = ctx.trusted(step);
            let mut checks = Vec::new();
            if let Some(t) = state.theta.as_ref() {
                let mut gaps = Vec::new();
                for (i, p) in ps.iter().enumerate() {
                    let alt = blh::extract_phi_via_theta(t, s, w, i + 1)?;
                    for m in 0..=top.min(p.degree()) {
                        gaps.push((format!("axis_{}_degree_{m}", i + 1), linalg::op_norm(&(p.coeff_or_zero(m) - alt.coeff_or_zero(m)))));
                    }
                }
                checks.push(check("phi_formula_agreement", ctx.tol(step, FORMULA_TOL), Some(top), gaps));
            }
            let out = json!({ "phi": ps.iter().enumerate().map(|(i, p)| json!({ "axis": i + 1, "multiplier": poly_json(p) })).collect::<Vec<_>>() });
            state.phis = Some(ps);
            (out, checks)
        }
        Step::Intertwining { .. } => {
            let top = ctx.trusted(step);
            let mut residuals = Vec::new();
            for (i, p) in phis()?.iter().enumerate() {
                let rep = blh::verify_intertwining(&blh::kappa(ctx.working, i + 1)?, theta()?, p, top)?;
                residuals.extend(rep.residuals.iter().enumerate().map(|(m, &r)| (format!("axis_{}_degree_{m}", i + 1), r)));
            }
            (Value::Null, vec![check("intertwining", ctx.tol(step, IDENTITY_TOL), Some(top), residuals)])
        }
        Step::Commutation { .. } => {
            let top = ctx.trusted(step);
            let ps = phis()?;
            let mut residuals = Vec::new();
            for i in 0..ps.len() {
                for j in i + 1..ps.len() {
                    let rep = blh::multiplier_commutation(&ps[i], &ps[j], top)?;
                    residuals.extend(rep.residuals.iter().map(|r| (format!("axes_{}_{}_{}", i + 1, j + 1, r.label), r.value)));
                }
            }
            (json!({ "pairs": ps.len() * ps.len().saturating_sub(1) / 2 }), vec![check("multiplier_commutation", ctx.tol(step, IDENTITY_TOL), Some(top), residuals)])
        }
        Step::Rebuild { .. } => {
            let s = s()?;
            let rebuilt = subspace::build_from_theta(theta()?, ctx.working)?;
            let angles = subspace::principal_angles(s, &rebuilt)?;
            let inv = subspace::check_invariant(&rebuilt, &operators::model_tuple(ctx.working))?;
            let worst = angles.iter().copied().fold(0.0, f64::max);
            let labels = axis_labels(ctx.working.n);
            let checks = vec![
                check("principal_angles", ctx.tol(step, ANGLE_TOL), trusted_opt, [("max_angle".to_string(), worst)]),
                check(
                    "rebuilt_invariance",
                    ctx.tol(step, IDENTITY_TOL),
                    trusted_opt,
                    labels.iter().cloned().zip(inv.safe_residuals.iter().copied()),
                ),
            ];
            (json!({ "dim_rebuilt": rebuilt.dim(), "dim_s": s.dim() }), checks)
        }
        Step::Purity { cap, steps } => {
            let cap = cap.unwrap_or(ctx.working.outer_cap);
            let steps = steps.unwrap_or(PURITY_STEPS);
            let mut out = Vec::new();
            let mut residuals = Vec::new();
            for (i, p) in phis()?.iter().enumerate() {
                let rep = blh::shift_purity_diagnostic(p, cap, steps)?;
                let last = rep.profile.last().copied().unwrap_or(0.0);
                residuals.push((format!("axis_{}_final", i + 1), if rep.non_increasing { last } else { f64::INFINITY }));
                out.push(json!({ "axis": i + 1, "profile": rep.profile, "non_increasing": rep.non_increasing, "pure": rep.pure }));
            }
            // the threshold is a heuristic; --tolerance does not override it
            (json!({ "cap": cap, "steps": steps, "axes": out }), vec![check("shift_purity", blh::PURITY_THRESHOLD, None, residuals)])
        }
        Step::Defect { expect_rank } => {
            let rep = classify::subspace_defect(s()?)?;
            let mut checks = vec![check("defect_gap", 1.0 / MIN_DEFECT_GAP, None, [("inverse_gap".to_string(), 1.0 / rep.gap)])];
            if let Some(e) = expect_rank {
                checks.push(check("defect_rank", 0.5, None, [("rank_mismatch".to_string(), rep.rank.abs_diff(*e) as f64)]));
            }
            let out = json!({ "rank": rep.rank, "tolerance": rep.tolerance, "gap": finite_or_null(rep.gap), "singular_values": rep.singular_values });
            (out, checks)
        }
        Step::Classify { expect_doubly_commuting } => {
            let c = classify::doubly_commuting_classification(s()?, exec)?;
            let mut residuals = vec![("dichotomy_mismatch".to_string(), if c.consistent { 0.0 } else { 1.0 })];
            if let Some(e) = expect_doubly_commuting {
                residuals.push(("expectation_mismatch".to_string(), if c.doubly_commuting == *e { 0.0 } else { 1.0 }));
            }
            let out = json!({
                "doubly_commuting": c.doubly_commuting,
                "phi_constant": c.phi_constant,
                "max_adjoint_commutator": c.max_adjoint_commutator,
                "max_higher_phi": c.max_higher_phi,
                "defect_rank": c.defect.rank,
                "wandering_dim": c.wandering_dim,
                "model_dim": c.model_dim,
                "tolerance": c.tolerance,
            });
            (out, vec![check("classification", 0.5, Some(c.trusted_degree), residuals)])
        }
    })
}

fn axis_labels(n: usize) -> Vec<String> {
    std::iter::once("outer".to_string()).chain((1..=n).map(|i| format!("inner_{i}"))).collect()
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn stability(s: &SubspaceBasis, gens: &[HardyVector], grade: Grade, margin: usize, settings: &Settings) -> hardy_blh::Result<Stability> {
    let summarize = |s: &SubspaceBasis, margin| -> hardy_blh::Result<MarginRun> {
        let w = subspace::wandering_subspace(s)?;
        Ok(MarginRun { working_margin: margin, dim_s: s.dim(), dim_w: w.dim(), certified: w.certified() })
    };
    let here = summarize(s, margin)?;
    let wider = subspace::orbit_span(gens, grade, margin + 1, settings.exec)?;
    let next = summarize(&wider, margin + 1)?;
    let stable = here.dim_w == next.dim_w && here.certified == next.certified;
    Ok(Stability { runs: [here, next], stable })
}

/// Validates and executes a scenario. Computation failures stop the
/// pipeline and are recorded in the failing step; only input problems are
/// returned as errors.
pub fn run(sc: &Scenario, settings: &Settings) -> Result<(RunReport, State), CliError> {
    let gens = sc.validate(settings)?;
    let start = Instant::now();
    let working = sc.working_grade(settings);
    let margin = sc.working_margin(settings);
    let ctx = Ctx { settings, grade: sc.grade, working, trusted: working.trusted_degree() };
    let header = serde_json::to_vec(&json!({
        "grade": sc.grade,
        "generators": sc.generators,
        "working_margin": margin,
        "tolerance": settings.tolerance,
    }))
    .expect("header serializes");

    let mut state = State::default();
    let mut steps = Vec::with_capacity(sc.pipeline.len());
    let mut steps_ms = Vec::with_capacity(sc.pipeline.len());
    let mut stab = None;
    let mut prev = String::new();
    for (index, step) in sc.pipeline.iter().enumerate() {
        let t0 = Instant::now();
        let input_digest = digest(&header, step, &prev);
        let rec = match run_step(step, &ctx, &gens, &mut state) {
            Ok((outputs, checks)) => {
                let passed = checks.iter().all(|c| c.verdict);
                StepRecord { index, step: step.name().into(), input_digest: input_digest.clone(), outputs, checks, passed, error: None }
            }
            Err(e) => StepRecord {
                index,
                step: step.name().into(),
                input_digest: input_digest.clone(),
                outputs: Value::Null,
                checks: Vec::new(),
                passed: false,
                error: Some(e.to_string()),
            },
        };
        if matches!(step, Step::Build) && settings.stability {
            if let Some(s) = state.subspace.as_ref() {
                stab = stability(s, &gens, sc.grade, margin, settings).ok();
            }
        }
        let failed = rec.error.is_some();
        steps.push(rec);
        steps_ms.push(t0.elapsed().as_secs_f64() * 1e3);
        prev = input_digest;
        if failed {
            break;
        }
    }
    let passed = steps.len() == sc.pipeline.len() && steps.iter().all(|r| r.passed);
    let report = RunReport {
        toolkit: Toolkit::current(),
        label: sc.label.clone(),
        grade: sc.grade,
        working_grade: working,
        working_margin: margin,
        generators: gens.iter().map(|g| g.to_string()).collect(),
        steps,
        stability: stab,
        passed,
        timing: settings.timing.then(|| Timing { total_ms: start.elapsed().as_secs_f64() * 1e3, steps_ms }),
    };
    Ok((report, state))
}

/// Fills in the wandering subspace, Θ and the multipliers when a pipeline
/// stopped short of them.
pub fn complete(state: &mut State, settings: &Settings) -> hardy_blh::Result<()> {
    let s = state.subspace.as_ref().ok_or_else(|| missing("subspace"))?;
    if state.wandering.is_none() {
        state.wandering = Some(subspace::wandering_subspace(s)?);
    }
    let w = state.wandering.as_ref().expect("just set");
    if state.theta.is_none() {
        state.theta = Some(blh::extract_theta(s, w, false)?);
    }
    if state.phis.is_none() {
        state.phis = Some(blh::extract_phi_all(s, w, settings.exec)?);
    }
    Ok(())
}

pub fn matrix_json(m: &linalg::CMat) -> Value {
    serde_json::to_value(MatrixRecord::from_matrix(m)).expect("matrices serialize")
}
