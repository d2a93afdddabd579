//! Inner-function extraction and the multiplier tuple of an invariant subspace.
//!
//! With `W = S ⊖ M_z S` and orthonormal basis `w_1..w_r`, the coefficient
//! `Θ_m` is the outer-degree-`m` block of the basis (shape `q × r`). The
//! multiplier `Φ_i` has coefficients `P_W (P_S M_z^*)^m κ_i |_W`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grade::Grade;
use crate::linalg::{self, CMat};
use crate::matpoly::MatrixPolynomial;
use crate::operators::{self, Axis, IDENTITY_TOL};
use crate::par::{self, Execution};
use crate::report::Report;
use crate::subspace::{SubspaceBasis, Wandering};

/// Profile threshold below which a decaying adjoint-power profile counts as pure.
pub const PURITY_THRESHOLD: f64 = 1e-6;

/// `κ_i` as a constant `q × q` matrix polynomial.
pub fn kappa(grade: Grade, axis: usize) -> Result<MatrixPolynomial> {
    Ok(MatrixPolynomial::constant(operators::inner_shift(grade, axis)?))
}

fn check_pair(s: &SubspaceBasis, w: &Wandering) -> Result<Grade> {
    if s.grade() != w.basis.grade() {
        return Err(Error::GradeMismatch("wandering basis and subspace on different grades".into()));
    }
    Ok(*s.grade())
}

/// Θ with coefficients `0..=D` of the working grade.
///
/// Refuses wandering bases with suspect vectors unless `force` is set.
pub fn extract_theta(s: &SubspaceBasis, w: &Wandering, force: bool) -> Result<MatrixPolynomial> {
    let g = check_pair(s, w)?;
    let count = w.suspect.iter().filter(|&&x| x).count();
    if count > 0 && !force {
        return Err(Error::UncertifiedWandering { count });
    }
    let q = g.inner_dim();
    let b = w.basis.basis();
    MatrixPolynomial::new((0..=g.outer_cap).map(|m| b.rows(m * q, q).into_owned()).collect())
}

fn check_axis(g: &Grade, axis: usize) -> Result<()> {
    if axis == 0 || axis > g.n {
        return Err(Error::AxisOutOfRange { axis, n: g.n });
    }
    Ok(())
}

/// `Φ_i^{(m)} = P_W (P_S M_z^*)^m κ_i|_W` for `m = 0..=D`.
pub fn extract_phi(s: &SubspaceBasis, w: &Wandering, axis: usize) -> Result<MatrixPolynomial> {
    let g = check_pair(s, w)?;
    check_axis(&g, axis)?;
    let b = s.basis();
    let wb = w.basis.basis();
    let k = operators::shift_matrix(Axis::Inner(axis), g)?;
    let kw = k.matrix() * wb;
    let mut coords = b.adjoint() * &kw;
    let leak = linalg::op_norm(&(&kw - b * &coords));
    if leak > IDENTITY_TOL {
        return Err(Error::NotInvariant { what: format!("inner shift {axis} on W"), residual: leak });
    }
    let mz = operators::shift_matrix(Axis::Outer, g)?;
    let back = b.adjoint() * mz.matrix().adjoint() * b;
    let w_in_s = wb.adjoint() * b;
    let mut coeffs = Vec::with_capacity(g.outer_cap + 1);
    for _ in 0..=g.outer_cap {
        coeffs.push(&w_in_s * &coords);
        coords = &back * coords;
    }
    MatrixPolynomial::new(coeffs)
}

/// [`extract_phi`] for every inner axis.
pub fn extract_phi_all(s: &SubspaceBasis, w: &Wandering, exec: Execution) -> Result<Vec<MatrixPolynomial>> {
    let axes: Vec<usize> = (1..=s.grade().n).collect();
    par::map(exec, &axes, |&i| extract_phi(s, w, i)).into_iter().collect()
}

/// `Φ_i^{(m)} = P_W M_Θ M_z^{*m} M_Θ^* κ_i|_W`, using only Θ's Toeplitz matrix
/// and the wandering basis.
pub fn extract_phi_via_theta(
    theta: &MatrixPolynomial,
    s: &SubspaceBasis,
    w: &Wandering,
    axis: usize,
) -> Result<MatrixPolynomial> {
    let g = check_pair(s, w)?;
    check_axis(&g, axis)?;
    let (q, r) = (g.inner_dim(), w.dim());
    if theta.shape() != (q, r) {
        return Err(Error::Shape(format!("Θ is {:?}, expected {q}x{r}", theta.shape())));
    }
    let d = g.outer_cap;
    let t = theta.toeplitz(d);
    let wb = w.basis.basis();
    let k = operators::shift_matrix(Axis::Inner(axis), g)?;
    let pulled = t.adjoint() * (k.matrix() * wb);
    let mut coeffs = Vec::with_capacity(d + 1);
    for m in 0..=d {
        let mut shifted = CMat::zeros((d + 1) * r, r);
        let keep = (d + 1 - m) * r;
        shifted.rows_mut(0, keep).copy_from(&pulled.rows(m * r, keep));
        coeffs.push(wb.adjoint() * (&t * shifted));
    }
    MatrixPolynomial::new(coeffs)
}

#[derive(Debug, Clone, Serialize)]
pub struct IntertwineReport {
    /// `‖(κ_i Θ − Θ Φ_i)_m‖` for `m = 0..=trusted_degree`.
    pub residuals: Vec<f64>,
    pub trusted_degree: usize,
    pub tolerance: f64,
    pub verdict: bool,
}

impl IntertwineReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Coefficientwise check of `κ_i Θ = Θ Φ_i` up to `trusted_degree`.
pub fn verify_intertwining(
    kappa: &MatrixPolynomial,
    theta: &MatrixPolynomial,
    phi: &MatrixPolynomial,
    trusted_degree: usize,
) -> Result<IntertwineReport> {
    if kappa.cols() != theta.rows() || theta.cols() != phi.rows() || phi.rows() != phi.cols() {
        return Err(Error::Shape(format!(
            "κ {:?}, Θ {:?}, Φ {:?}",
            kappa.shape(),
            theta.shape(),
            phi.shape()
        )));
    }
    let residuals = (0..=trusted_degree)
        .map(|m| linalg::op_norm(&(kappa.product_coeff(theta, m) - theta.product_coeff(phi, m))))
        .collect::<Vec<_>>();
    let verdict = residuals.iter().all(|&r| r < IDENTITY_TOL);
    Ok(IntertwineReport { residuals, trusted_degree, tolerance: IDENTITY_TOL, verdict })
}

/// `‖Σ_m Θ_m^* Θ_{m+k} − δ_{k0} I‖` for offsets `k ≤ max_offset` (default: all).
pub fn is_isometric_multiplier(theta: &MatrixPolynomial, max_offset: Option<usize>) -> Report {
    let deg = theta.degree();
    let top = max_offset.map_or(deg, |k| k.min(deg));
    let mut r = Report::new("isometric_multiplier", IDENTITY_TOL, Some(top));
    let cs = theta.coeffs();
    for k in 0..=top {
        let mut g = CMat::zeros(theta.cols(), theta.cols());
        for m in 0..=deg - k {
            g += cs[m].adjoint() * &cs[m + k];
        }
        if k == 0 {
            g -= linalg::identity(theta.cols());
        }
        r.push(format!("offset_{k}"), linalg::op_norm(&g));
    }
    r
}

/// `‖(Φ_i Φ_j − Φ_j Φ_i)_m‖` for `m ≤ trusted_degree`.
pub fn multiplier_commutation(
    phi_i: &MatrixPolynomial,
    phi_j: &MatrixPolynomial,
    trusted_degree: usize,
) -> Result<Report> {
    if phi_i.shape() != phi_j.shape() || phi_i.rows() != phi_i.cols() {
        return Err(Error::Shape(format!("{:?} vs {:?}", phi_i.shape(), phi_j.shape())));
    }
    let mut r = Report::new("multiplier_commutation", IDENTITY_TOL, Some(trusted_degree));
    for m in 0..=trusted_degree {
        let d = phi_i.product_coeff(phi_j, m) - phi_j.product_coeff(phi_i, m);
        r.push(format!("degree_{m}"), linalg::op_norm(&d));
    }
    Ok(r)
}

#[derive(Debug, Clone, Serialize)]
pub struct PurityReport {
    /// `max_k ‖(M_Φ^*)^m ε_k‖` over the standard basis of the capped space, `m = 1..=steps`.
    pub profile: Vec<f64>,
    pub threshold: f64,
    pub non_increasing: bool,
    /// Heuristic: non-increasing profile ending below the threshold.
    pub pure: bool,
}

/// Decay of adjoint powers of `M_Φ` on `W`-valued polynomials of degree `≤ cap`.
///
/// Requires `M_Φ` to be contractive on the capped space, so each per-vector
/// sequence is non-increasing.
pub fn shift_purity_diagnostic(phi: &MatrixPolynomial, cap: usize, steps: usize) -> Result<PurityReport> {
    if phi.rows() != phi.cols() {
        return Err(Error::Shape(format!("Φ is {:?}", phi.shape())));
    }
    let t = phi.toeplitz(cap);
    let norm = linalg::op_norm(&t);
    if norm > 1.0 + IDENTITY_TOL {
        return Err(Error::NotContractive { norm });
    }
    let adj = t.adjoint();
    let mut power = linalg::identity(t.nrows());
    let mut profile = Vec::with_capacity(steps);
    for _ in 0..steps {
        power = &adj * power;
        profile.push(power.column_iter().map(|c| c.norm()).fold(0.0, f64::max));
    }
    let non_increasing = profile.windows(2).all(|w| w[1] <= w[0] + IDENTITY_TOL);
    let pure = non_increasing && profile.last().is_some_and(|&x| x < PURITY_THRESHOLD);
    Ok(PurityReport { profile, threshold: PURITY_THRESHOLD, non_increasing, pure })
}

/// Compares `M_Θ^* κ_i M_Θ` with the Toeplitz matrix of `Φ_i` on output
/// degrees `≤ D − deg Θ`, where truncation does not reach.
pub fn compressed_symbol_residual(
    theta: &MatrixPolynomial,
    phi: &MatrixPolynomial,
    grade: Grade,
    axis: usize,
) -> Result<Report> {
    check_axis(&grade, axis)?;
    let d = grade.outer_cap;
    let deg = theta.effective_degree(IDENTITY_TOL);
    let mut r = Report::new("compressed_symbol", IDENTITY_TOL, d.checked_sub(deg));
    let Some(rows_deg) = d.checked_sub(deg) else {
        r.note("Θ degree exceeds the outer cap; nothing to compare");
        return Ok(r);
    };
    let t = theta.toeplitz(d);
    let k = operators::shift_matrix(Axis::Inner(axis), grade)?;
    let lhs = t.adjoint() * k.matrix() * &t;
    let rhs = phi.toeplitz(d);
    let keep = (rows_deg + 1) * phi.rows();
    r.push(format!("axis_{axis}"), linalg::op_norm(&(lhs.rows(0, keep) - rhs.rows(0, keep))));
    Ok(r)
}
