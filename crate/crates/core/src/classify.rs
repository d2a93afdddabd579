//! Classification certificates: coincidence of multiplier tuples, nested
//! factorization, uniqueness of the inner function, module maps and the
//! doubly-commuting dichotomy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::blh;
use crate::error::{Error, Result};
use crate::grade::Grade;
use crate::linalg::{self, c, CMat, RANK_TOL};
use crate::matpoly::MatrixPolynomial;
use crate::operators::{self, Axis, DefectReport, OperatorMatrix, IDENTITY_TOL};
use crate::par::Execution;
use crate::serial;
use crate::subspace::{self, SubspaceBasis};

/// Tolerance for certificates (unitarity, factorization, conjugation).
pub const CERT_TOL: f64 = 1e-8;
/// Largest intertwiner-space dimension searched for a unitary.
pub const MAX_SEARCH_DIM: usize = 8;
/// Singular-value cutoff for the intertwiner nullspace.
const INTERTWINER_TOL: f64 = 1e-9;
const POLAR_ITERATIONS: usize = 400;
const RANDOM_SEEDS: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Certified,
    Rejected,
    Indeterminate,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceCertificate {
    pub outcome: Outcome,
    #[serde(serialize_with = "serial::opt_matrix")]
    pub tau: Option<CMat>,
    pub intertwiner_dim: Option<usize>,
    /// Per axis, per coefficient degree: `‖τ Φ_i^{(m)} − Φ̃_i^{(m)} τ‖`
    /// (or `‖Θ_m − Θ̃_m τ‖` for uniqueness certificates, as one row).
    pub intertwine_residuals: Vec<Vec<f64>>,
    pub unitarity_residual: Option<f64>,
    pub tolerance: f64,
    pub notes: Vec<String>,
}

impl EquivalenceCertificate {
    fn rejected(note: impl Into<String>, tolerance: f64) -> Self {
        EquivalenceCertificate {
            outcome: Outcome::Rejected,
            tau: None,
            intertwiner_dim: None,
            intertwine_residuals: Vec::new(),
            unitarity_residual: None,
            tolerance,
            notes: vec![note.into()],
        }
    }

    pub fn max_intertwine_residual(&self) -> f64 {
        self.intertwine_residuals.iter().flatten().copied().fold(0.0, f64::max)
    }
}

fn check_tuple(phis: &[MatrixPolynomial]) -> Result<usize> {
    let first = phis.first().ok_or_else(|| Error::Shape("empty multiplier tuple".into()))?;
    let r = first.rows();
    if phis.iter().any(|p| p.shape() != (r, r)) {
        return Err(Error::Shape("multiplier tuple entries must be square of one size".into()));
    }
    Ok(r)
}

/// `‖τ Φ_i^{(m)} − Φ̃_i^{(m)} τ‖` for each axis and `m ≤ degree`.
pub fn conjugation_residuals(tau: &CMat, phis: &[MatrixPolynomial], phis_t: &[MatrixPolynomial]) -> Vec<Vec<f64>> {
    phis.iter()
        .zip(phis_t)
        .map(|(p, pt)| {
            let deg = p.degree().max(pt.degree());
            (0..=deg).map(|m| linalg::op_norm(&(tau * p.coeff_or_zero(m) - pt.coeff_or_zero(m) * tau))).collect()
        })
        .collect()
}

/// Fixes the phase so the first entry of largest modulus is real positive.
fn normalize_phase(x: &mut CMat) {
    let mut best = (0.0, c(1.0, 0.0));
    for v in x.iter() {
        if v.norm() > best.0 * (1.0 + 1e-9) {
            best = (v.norm(), *v);
        }
    }
    if best.0 > 0.0 {
        let phase = best.1.conj() / best.0;
        *x *= phase;
    }
}

fn combine(basis: &[CMat], coeffs: &[linalg::C64]) -> CMat {
    let mut x = CMat::zeros(basis[0].nrows(), basis[0].ncols());
    for (b, c) in basis.iter().zip(coeffs) {
        x += b * *c;
    }
    x
}

/// Alternating projection between the intertwiner space and the unitary group.
/// Returns the in-space iterate scaled to Frobenius norm `sqrt(r)`.
fn polar_search(basis: &[CMat], seed: Vec<linalg::C64>) -> Option<CMat> {
    let r = basis[0].nrows() as f64;
    let mut coeffs = seed;
    let mut x = combine(basis, &coeffs);
    for _ in 0..POLAR_ITERATIONS {
        if x.norm() < 1e-12 {
            return None;
        }
        let u = linalg::polar_unitary(&x);
        coeffs = basis.iter().map(|b| linalg::frob_inner(b, &u)).collect();
        let next = combine(basis, &coeffs);
        let gap = (&next - &u).norm();
        let step = (&next - &x).norm();
        x = next;
        if gap < 1e-13 || step < 1e-15 {
            break;
        }
    }
    let nrm = x.norm();
    (nrm > 1e-12).then(|| x * c(r.sqrt() / nrm, 0.0))
}

fn unitarity(x: &CMat) -> f64 {
    let i = linalg::identity(x.ncols());
    linalg::op_norm(&(x.adjoint() * x - &i)).max(linalg::op_norm(&(x * x.adjoint() - &i)))
}

/// Searches for a unitary `τ` with `τ Φ_i^{(m)} = Φ̃_i^{(m)} τ` for all `i, m`.
///
/// The intertwiner space is the SVD nullspace of the stacked linear system.
/// A one-dimensional space is decided exactly; spaces up to
/// [`MAX_SEARCH_DIM`] are searched by polar projection from deterministic
/// seeds; larger spaces, or a failed search, are indeterminate.
pub fn coincide(phis: &[MatrixPolynomial], phis_t: &[MatrixPolynomial]) -> Result<EquivalenceCertificate> {
    if phis.len() != phis_t.len() {
        return Err(Error::Shape(format!("{} multipliers vs {}", phis.len(), phis_t.len())));
    }
    let r = check_tuple(phis)?;
    let rt = check_tuple(phis_t)?;
    if r != rt {
        return Ok(EquivalenceCertificate::rejected(format!("wandering dimensions differ ({r} vs {rt})"), CERT_TOL));
    }
    // unitary similarity preserves singular values of every coefficient
    for (i, (p, pt)) in phis.iter().zip(phis_t).enumerate() {
        for m in 0..=p.degree().max(pt.degree()) {
            let (a, b) = (linalg::singular_values(&p.coeff_or_zero(m)), linalg::singular_values(&pt.coeff_or_zero(m)));
            let gap = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            if gap > CERT_TOL {
                return Ok(EquivalenceCertificate::rejected(
                    format!("singular values of coefficient {m} on axis {} differ by {gap:.3e}", i + 1),
                    CERT_TOL,
                ));
            }
        }
    }
    let eye = linalg::identity(r);
    let mut blocks = Vec::new();
    for (p, pt) in phis.iter().zip(phis_t) {
        for m in 0..=p.degree().max(pt.degree()) {
            let (a, b) = (p.coeff_or_zero(m), pt.coeff_or_zero(m));
            if a.norm() == 0.0 && b.norm() == 0.0 {
                continue;
            }
            blocks.push(a.transpose().kronecker(&eye) - eye.kronecker(&b));
        }
    }
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut system = CMat::zeros(rows, r * r);
    let mut at = 0;
    for b in &blocks {
        system.rows_mut(at, b.nrows()).copy_from(b);
        at += b.nrows();
    }
    let null = linalg::nullspace(&system, INTERTWINER_TOL);
    let k = null.ncols();
    let basis: Vec<CMat> = (0..k).map(|j| CMat::from_column_slice(r, r, null.column(j).as_slice())).collect();
    let mut cert = EquivalenceCertificate {
        outcome: Outcome::Rejected,
        tau: None,
        intertwiner_dim: Some(k),
        intertwine_residuals: Vec::new(),
        unitarity_residual: None,
        tolerance: CERT_TOL,
        notes: Vec::new(),
    };
    if k == 0 {
        cert.notes.push("no nonzero intertwiner".into());
        return Ok(cert);
    }
    if k > MAX_SEARCH_DIM {
        cert.outcome = Outcome::Indeterminate;
        cert.notes.push(format!("intertwiner space of dimension {k} exceeds the search cap {MAX_SEARCH_DIM}"));
        return Ok(cert);
    }
    let candidate = if k == 1 {
        Some(&basis[0] * c((r as f64).sqrt() / basis[0].norm(), 0.0))
    } else {
        let mut seeds: Vec<Vec<linalg::C64>> = Vec::new();
        let proj_i: Vec<_> = basis.iter().map(|b| linalg::frob_inner(b, &eye)).collect();
        if proj_i.iter().any(|x| x.norm() > 1e-12) {
            seeds.push(proj_i);
        }
        for l in 0..k {
            let mut e = vec![c(0.0, 0.0); k];
            e[l] = c(1.0, 0.0);
            seeds.push(e);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x0b1a_5eed);
        for _ in 0..RANDOM_SEEDS {
            seeds.push((0..k).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect());
        }
        let mut best: Option<(f64, CMat)> = None;
        for seed in seeds {
            if let Some(x) = polar_search(&basis, seed) {
                let u = unitarity(&x);
                if best.as_ref().is_none_or(|(b, _)| u < *b) {
                    best = Some((u, x));
                }
                if u < CERT_TOL {
                    break;
                }
            }
        }
        best.map(|(_, x)| x)
    };
    let Some(mut tau) = candidate else {
        cert.outcome = Outcome::Indeterminate;
        cert.notes.push("unitary search produced no candidate".into());
        return Ok(cert);
    };
    normalize_phase(&mut tau);
    let u = unitarity(&tau);
    cert.intertwine_residuals = conjugation_residuals(&tau, phis, phis_t);
    cert.unitarity_residual = Some(u);
    cert.outcome = if u < CERT_TOL && cert.max_intertwine_residual() < CERT_TOL {
        Outcome::Certified
    } else if k == 1 {
        cert.notes.push("the intertwiner space is spanned by a non-unitary".into());
        Outcome::Rejected
    } else {
        cert.notes.push("unitary search did not converge".into());
        Outcome::Indeterminate
    };
    cert.tau = Some(tau);
    Ok(cert)
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorizationCertificate {
    pub psi: MatrixPolynomial,
    /// `‖Θ_{1,m} − (Θ_2 Ψ)_m‖`
    pub factor_residuals: Vec<f64>,
    pub psi_isometry_residual: f64,
    /// Per axis: `‖(Ψ Φ_{1,i} − Φ_{2,i} Ψ)_m‖`
    pub intertwine_residuals: Vec<Vec<f64>>,
    pub trusted_degree: usize,
    pub tolerance: f64,
    pub nested: bool,
}

/// Factors `Θ_1 = Θ_2 Ψ` with `Ψ_m = Σ_k Θ_{2,k}^* Θ_{1,k+m}` and checks that
/// `Ψ` is an isometric multiplier intertwining the two multiplier tuples.
pub fn nested_factor(
    theta1: &MatrixPolynomial,
    theta2: &MatrixPolynomial,
    phis1: &[MatrixPolynomial],
    phis2: &[MatrixPolynomial],
    trusted_degree: Option<usize>,
) -> Result<FactorizationCertificate> {
    if theta1.rows() != theta2.rows() {
        return Err(Error::Shape(format!("Θ codomains differ: {} vs {}", theta1.rows(), theta2.rows())));
    }
    if phis1.len() != phis2.len() {
        return Err(Error::Shape("multiplier tuples of different length".into()));
    }
    let iso = blh::is_isometric_multiplier(theta2, None);
    if !iso.verdict {
        return Err(Error::NotIsometric { residual: iso.max_residual() });
    }
    let (c1, c2) = (theta1.coeffs(), theta2.coeffs());
    let psi = MatrixPolynomial::new(
        (0..=theta1.degree())
            .map(|m| {
                let mut acc = CMat::zeros(theta2.cols(), theta1.cols());
                for (k, t2) in c2.iter().enumerate() {
                    if let Some(t1) = c1.get(k + m) {
                        acc += t2.adjoint() * t1;
                    }
                }
                acc
            })
            .collect(),
    )?;
    let phi_deg = phis1.iter().chain(phis2).map(|p| p.degree()).min().unwrap_or(theta1.degree());
    let trusted = trusted_degree.unwrap_or(theta1.degree()).min(theta1.degree()).min(phi_deg);
    let factor_residuals =
        (0..=trusted).map(|m| linalg::op_norm(&(&c1[m] - theta2.product_coeff(&psi, m)))).collect::<Vec<_>>();
    let psi_isometry_residual = blh::is_isometric_multiplier(&psi, None).max_residual();
    let mut intertwine_residuals = Vec::new();
    for (p1, p2) in phis1.iter().zip(phis2) {
        if p1.shape() != (theta1.cols(), theta1.cols()) || p2.shape() != (theta2.cols(), theta2.cols()) {
            return Err(Error::Shape("multiplier sizes do not match the wandering dimensions".into()));
        }
        intertwine_residuals.push(
            (0..=trusted).map(|m| linalg::op_norm(&(psi.product_coeff(p1, m) - p2.product_coeff(&psi, m)))).collect(),
        );
    }
    let nested = factor_residuals.iter().chain(intertwine_residuals.iter().flatten()).all(|&r| r < CERT_TOL)
        && psi_isometry_residual < CERT_TOL;
    Ok(FactorizationCertificate {
        psi,
        factor_residuals,
        psi_isometry_residual,
        intertwine_residuals,
        trusted_degree: trusted,
        tolerance: CERT_TOL,
        nested,
    })
}

fn toeplitz_range(theta: &MatrixPolynomial, cap: usize) -> CMat {
    linalg::range_basis(&theta.toeplitz(cap), linalg::SVD_CUTOFF)
}

/// `τ = Σ_k Θ̃_k^* Θ_k` for two isometric multipliers with the same range;
/// certifies `Θ = Θ̃ τ` with `τ` unitary.
pub fn uniqueness_tau(theta: &MatrixPolynomial, theta_t: &MatrixPolynomial) -> Result<EquivalenceCertificate> {
    if theta.rows() != theta_t.rows() {
        return Err(Error::Shape(format!("Θ codomains differ: {} vs {}", theta.rows(), theta_t.rows())));
    }
    for t in [theta, theta_t] {
        let iso = blh::is_isometric_multiplier(t, None);
        if !iso.verdict {
            return Err(Error::NotIsometric { residual: iso.max_residual() });
        }
    }
    if theta.cols() != theta_t.cols() {
        return Ok(EquivalenceCertificate::rejected("wandering dimensions differ", IDENTITY_TOL));
    }
    let cap = theta.degree().max(theta_t.degree());
    let (ra, rb) = (toeplitz_range(theta, cap), toeplitz_range(theta_t, cap));
    let angle = if ra.ncols() == rb.ncols() {
        linalg::principal_angles(&ra, &rb).last().copied().unwrap_or(0.0)
    } else {
        f64::INFINITY
    };
    if !(angle < CERT_TOL) {
        let mut cert = EquivalenceCertificate::rejected("ranges differ", IDENTITY_TOL);
        cert.notes.push(format!("largest principal angle {angle:.3e}"));
        return Ok(cert);
    }
    let mut tau = CMat::zeros(theta_t.cols(), theta.cols());
    for (k, t) in theta_t.coeffs().iter().enumerate() {
        if let Some(s) = theta.coeff(k) {
            tau += t.adjoint() * s;
        }
    }
    let residuals: Vec<f64> =
        (0..=cap).map(|m| linalg::op_norm(&(theta.coeff_or_zero(m) - theta_t.coeff_or_zero(m) * &tau))).collect();
    let u = unitarity(&tau);
    let ok = u < IDENTITY_TOL && residuals.iter().all(|&r| r < IDENTITY_TOL);
    Ok(EquivalenceCertificate {
        outcome: if ok { Outcome::Certified } else { Outcome::Rejected },
        tau: Some(tau),
        intertwiner_dim: None,
        intertwine_residuals: vec![residuals],
        unitarity_residual: Some(u),
        tolerance: IDENTITY_TOL,
        notes: Vec::new(),
    })
}

/// Matrix of `P_Cap M_G` between two ambients with equal caps, where
/// `G = Σ z^{κ} G_κ` and `κ` lists the outer exponent first.
pub fn module_map_from_symbol(terms: &[(Vec<usize>, CMat)], src: Grade, dst: Grade) -> Result<OperatorMatrix> {
    if !src.same_caps(&dst) {
        return Err(Error::GradeMismatch(format!("{src:?} vs {dst:?}")));
    }
    let mut m = CMat::zeros(dst.ambient_dim(), src.ambient_dim());
    for (kappa, coeff) in terms {
        if kappa.len() != src.n + 1 {
            return Err(Error::Shape(format!("exponent {kappa:?} for n = {}", src.n)));
        }
        if coeff.shape() != (dst.coeff_dim, src.coeff_dim) {
            return Err(Error::Shape(format!("symbol coefficient {:?}", coeff.shape())));
        }
        for j in 0..src.ambient_dim() {
            let idx = src.multi_index(j);
            let mut out = idx.clone();
            out.outer += kappa[0];
            for (b, k) in out.inner.iter_mut().zip(&kappa[1..]) {
                *b += k;
            }
            if out.outer > dst.outer_cap || out.inner.iter().any(|&b| b > dst.inner_cap) {
                continue;
            }
            for e in 0..dst.coeff_dim {
                out.coord = e;
                let i = dst.index_of(&out)?;
                m[(i, j)] += coeff[(e, idx.coord)];
            }
        }
    }
    OperatorMatrix::new(src, dst, m)
}

#[derive(Debug, Clone, Serialize)]
pub struct ModuleMapReport {
    /// `‖(X T_src − T_dst X) P_safe‖` for the outer shift then each inner shift.
    pub commutator_residuals: Vec<f64>,
    /// `‖P_safe (X^* X − I) P_safe‖`
    pub isometry_residual: f64,
    pub tolerance: f64,
    pub module_map: bool,
    pub isometric: bool,
}

/// Module-map and isometry residuals of `X` on the safe band of its domain.
pub fn module_map_check(x: &OperatorMatrix) -> Result<ModuleMapReport> {
    let (src, dst) = (*x.domain(), *x.codomain());
    if !src.same_caps(&dst) || src.safe_margin != dst.safe_margin {
        return Err(Error::GradeMismatch(format!("{src:?} vs {dst:?}")));
    }
    let safe = src.safe_indices();
    let mut axes = vec![Axis::Outer];
    axes.extend((1..=src.n).map(Axis::Inner));
    let mut commutator_residuals = Vec::new();
    for a in axes {
        let ts = operators::shift_matrix(a, src)?;
        let td = operators::shift_matrix(a, dst)?;
        let d = x.matrix() * ts.matrix() - td.matrix() * x.matrix();
        commutator_residuals.push(linalg::op_norm(&linalg::select_columns(&d, &safe)));
    }
    let gram = x.matrix().adjoint() * x.matrix() - linalg::identity(src.ambient_dim());
    let isometry_residual = linalg::op_norm(&linalg::principal_submatrix(&gram, &safe));
    let module_map = commutator_residuals.iter().all(|&r| r < IDENTITY_TOL);
    Ok(ModuleMapReport {
        commutator_residuals,
        isometry_residual,
        tolerance: IDENTITY_TOL,
        module_map,
        isometric: module_map && isometry_residual < IDENTITY_TOL,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BesselReport {
    /// Cumulative `Σ |⟨z^k η_l, X η_j⟩|²` over `|k| ≤ t`, for `t = 0, 1, …`.
    pub partial_sums: Vec<f64>,
    /// Per target slot `l`: `Σ_{j,k} |⟨z^k η_l, X η_j⟩|²`, each at most one.
    pub coordinate_sums: Vec<f64>,
    pub source_dim: usize,
    pub target_dim: usize,
    pub monotone: bool,
    pub within_bound: bool,
    pub dimension_inequality: bool,
}

/// Bessel-type sums for an isometric module map `X: H²_{E_1} → H²_{E_2}`.
pub fn bessel_diagnostics(x: &OperatorMatrix) -> Result<BesselReport> {
    let rep = module_map_check(x)?;
    if !rep.module_map {
        return Err(Error::NotModuleMap { residual: rep.commutator_residuals.iter().copied().fold(0.0, f64::max) });
    }
    if !rep.isometric {
        return Err(Error::NotIsometric { residual: rep.isometry_residual });
    }
    let (src, dst) = (*x.domain(), *x.codomain());
    let max_total = dst.outer_cap + dst.n * dst.inner_cap;
    let mut shells = vec![0.0; max_total + 1];
    let mut coordinate_sums = vec![0.0; dst.coeff_dim];
    for j in 0..src.coeff_dim {
        let col = x.matrix().column(j);
        for (i, v) in col.iter().enumerate() {
            let idx = dst.multi_index(i);
            shells[idx.total_degree()] += v.norm_sqr();
            coordinate_sums[idx.coord] += v.norm_sqr();
        }
    }
    let mut partial_sums = Vec::with_capacity(shells.len());
    let mut acc = 0.0;
    for s in shells {
        acc += s;
        partial_sums.push(acc);
    }
    let bound = dst.coeff_dim as f64 + IDENTITY_TOL;
    Ok(BesselReport {
        monotone: partial_sums.windows(2).all(|w| w[1] >= w[0]),
        within_bound: partial_sums.iter().all(|&p| p <= bound)
            && coordinate_sums.iter().all(|&s| s <= 1.0 + IDENTITY_TOL),
        partial_sums,
        coordinate_sums,
        source_dim: src.coeff_dim,
        target_dim: dst.coeff_dim,
        dimension_inequality: src.coeff_dim <= dst.coeff_dim,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ModuleMapBound {
    pub intertwiner_dim: usize,
    pub safe_domain_dim: usize,
    pub codomain_dim: usize,
    /// Proven lower bound on `‖P_safe (X^*X − I) P_safe‖` over all module maps.
    pub certified_lower_bound: f64,
    /// Smallest residual reached by least-squares descent over the module maps.
    pub best_residual: f64,
    pub seeds: usize,
    pub iterations: usize,
}

/// Least-squares search for an isometric module map `src → dst` over all
/// symbols `G = Σ z^κ G_κ` within the caps, with a rank-based lower bound.
///
/// When the safe domain is larger than the codomain, `X^*X` restricted to the
/// safe band has a kernel, so the isometry residual is at least one.
pub fn isometric_module_map_search(src: Grade, dst: Grade, seeds: usize, iterations: usize) -> Result<ModuleMapBound> {
    if !src.same_caps(&dst) {
        return Err(Error::GradeMismatch(format!("{src:?} vs {dst:?}")));
    }
    let (d1, d2) = (src.coeff_dim, dst.coeff_dim);
    let g1 = src.with_coeff_dim(1);
    let exps: Vec<Vec<usize>> = g1
        .iter()
        .map(|m| {
            let mut k = vec![m.outer];
            k.extend(m.inner);
            k
        })
        .collect();
    let safe = src.safe_indices();
    let build = |coeffs: &[CMat]| -> Result<CMat> {
        let terms: Vec<(Vec<usize>, CMat)> = exps.iter().cloned().zip(coeffs.iter().cloned()).collect();
        Ok(linalg::select_columns(module_map_from_symbol(&terms, src, dst)?.matrix(), &safe))
    };
    let objective = |y: &CMat| {
        let g = y.adjoint() * y - linalg::identity(y.ncols());
        (g.norm_squared(), g)
    };
    let mut best = f64::INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(0x00b0_55e1);
    for s in 0..seeds {
        let mut coeffs: Vec<CMat> = (0..exps.len())
            .map(|t| {
                if s == 0 {
                    // constant coisometry-like start
                    let mut m = CMat::zeros(d2, d1);
                    if t == 0 {
                        for e in 0..d1.min(d2) {
                            m[(e, e)] = c(1.0, 0.0);
                        }
                    }
                    m
                } else {
                    CMat::from_fn(d2, d1, |_, _| c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))
                }
            })
            .collect();
        let mut y = build(&coeffs)?;
        let (mut f, mut g) = objective(&y);
        let mut step = 0.1;
        for _ in 0..iterations {
            best = best.min(linalg::op_norm(&g));
            // gradient of ‖Y^*Y − I‖² with respect to conj(Y) is 2 Y (Y^*Y − I)
            let grad_y = &y * &g * c(2.0, 0.0);
            let grad: Vec<CMat> = exps.iter().map(|k| symbol_gradient(k, &grad_y, src, dst, &safe)).collect();
            let mut accepted = false;
            while step > 1e-12 {
                let trial: Vec<CMat> = coeffs.iter().zip(&grad).map(|(a, b)| a - b * c(step, 0.0)).collect();
                let ty = build(&trial)?;
                let (tf, tg) = objective(&ty);
                if tf < f {
                    coeffs = trial;
                    y = ty;
                    f = tf;
                    g = tg;
                    step *= 1.5;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        best = best.min(linalg::op_norm(&g));
    }
    let safe_domain_dim = safe.len();
    let codomain_dim = dst.ambient_dim();
    Ok(ModuleMapBound {
        intertwiner_dim: exps.len() * d1 * d2,
        safe_domain_dim,
        codomain_dim,
        certified_lower_bound: if safe_domain_dim > codomain_dim { 1.0 } else { 0.0 },
        best_residual: best,
        seeds,
        iterations,
    })
}

/// Frobenius pairing of `grad_y` with the safe-column matrix of each unit
/// symbol `z^κ E_{pq}`.
fn symbol_gradient(kappa: &[usize], grad_y: &CMat, src: Grade, dst: Grade, safe: &[usize]) -> CMat {
    let mut out = CMat::zeros(dst.coeff_dim, src.coeff_dim);
    for (col, &j) in safe.iter().enumerate() {
        let mut idx = src.multi_index(j);
        let q = idx.coord;
        idx.outer += kappa[0];
        for (b, k) in idx.inner.iter_mut().zip(&kappa[1..]) {
            *b += k;
        }
        if idx.outer > dst.outer_cap || idx.inner.iter().any(|&b| b > dst.inner_cap) {
            continue;
        }
        for p in 0..dst.coeff_dim {
            idx.coord = p;
            let i = dst.index_of(&idx).expect("in caps");
            out[(p, q)] += grad_y[(i, col)];
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub doubly_commuting: bool,
    pub phi_constant: bool,
    /// Doubly commuting exactly when every `Φ_i` is constant.
    pub consistent: bool,
    pub max_adjoint_commutator: f64,
    pub max_higher_phi: f64,
    pub defect: DefectReport,
    pub wandering_dim: usize,
    /// Coefficient dimension of the model space when doubly commuting.
    pub model_dim: Option<usize>,
    pub trusted_degree: usize,
    pub tolerance: f64,
}

/// Defect rank of the restricted tuple `(P_S M_z P_S, P_S M_{z_i} P_S)`,
/// compressed to `S` and to the safe band.
pub fn subspace_defect(s: &SubspaceBasis) -> Result<DefectReport> {
    let g = *s.grade();
    let p = s.projector();
    let d = operators::defect_operator(&s.restricted_tuple())?;
    let ds = &p * d.matrix() * &p;
    Ok(operators::rank_report(&linalg::principal_submatrix(&ds, &g.safe_indices()), RANK_TOL))
}

/// Doubly-commuting test for the restricted tuple on `S`, cross-checked
/// against constancy of the multiplier tuple.
pub fn doubly_commuting_classification(s: &SubspaceBasis, exec: Execution) -> Result<Classification> {
    let g = *s.grade();
    let inv = subspace::check_invariant(s, &operators::model_tuple(g))?;
    if !inv.verdict {
        let worst = inv.safe_residuals.iter().copied().fold(0.0, f64::max);
        return Err(Error::NotInvariant { what: "model tuple".into(), residual: worst });
    }
    let restricted = s.restricted_tuple();
    let comm = operators::commutation_residuals(&restricted, g, IDENTITY_TOL)?;
    let defect = subspace_defect(s)?;
    let w = subspace::wandering_subspace(s)?;
    let phis = blh::extract_phi_all(s, &w, exec)?;
    let trusted = g.trusted_degree().unwrap_or(0);
    let max_higher_phi = phis
        .iter()
        .flat_map(|p| p.coeffs().iter().enumerate().skip(1).take(trusted))
        .map(|(_, m)| linalg::op_norm(m))
        .fold(0.0, f64::max);
    let phi_constant = max_higher_phi < IDENTITY_TOL;
    let doubly = comm.doubly_commuting;
    Ok(Classification {
        doubly_commuting: doubly,
        phi_constant,
        consistent: doubly == phi_constant,
        max_adjoint_commutator: comm.max_adjoint_commutator(),
        max_higher_phi,
        model_dim: doubly.then_some(defect.rank),
        defect,
        wandering_dim: w.dim(),
        trusted_degree: trusted,
        tolerance: IDENTITY_TOL,
    })
}
