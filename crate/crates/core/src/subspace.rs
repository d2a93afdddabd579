//! Invariant subspaces of the capped slice, their wandering subspaces and the
//! Wold-type reconstruction.
//!
//! Subspaces are represented by canonical orthonormal bases (see
//! [`linalg::canonical_basis`]), so equal subspaces get equal bases up to
//! rounding regardless of how they were produced.

use serde::Serialize;

use crate::blh;
use crate::error::{Error, Result};
use crate::grade::Grade;
use crate::hardy::HardyVector;
use crate::linalg::{self, CMat, RANK_TOL, SVD_CUTOFF};
use crate::matpoly::MatrixPolynomial;
use crate::operators::{self, Axis, OperatorMatrix, IDENTITY_TOL};
use crate::par::{self, Execution};
use crate::report::Report;

/// Default number of extra outer degrees carried above the target grade.
pub const DEFAULT_WORKING_MARGIN: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub source: String,
    pub generators: Vec<String>,
    pub target: Grade,
    pub working_margin: usize,
}

/// Orthonormal basis of a subspace of `grade`'s capped slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    grade: Grade,
    columns: CMat,
    provenance: Provenance,
}

impl SubspaceBasis {
    /// Wraps `columns` after checking shape and orthonormality.
    pub fn new(grade: Grade, columns: CMat, provenance: Provenance) -> Result<Self> {
        if columns.nrows() != grade.ambient_dim() {
            return Err(Error::Shape(format!("{} rows for ambient {}", columns.nrows(), grade.ambient_dim())));
        }
        let residual = linalg::gram_residual(&columns);
        if residual > IDENTITY_TOL {
            return Err(Error::NonOrthonormal { residual });
        }
        Ok(SubspaceBasis { grade, columns, provenance })
    }

    /// Canonical basis for the span of the orthonormal columns `b`.
    pub(crate) fn canonical(grade: Grade, b: &CMat, provenance: Provenance) -> Result<Self> {
        Self::new(grade, linalg::canonical_basis(b), provenance)
    }

    pub fn grade(&self) -> &Grade {
        &self.grade
    }

    pub fn basis(&self) -> &CMat {
        &self.columns
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    pub fn projector(&self) -> CMat {
        &self.columns * self.columns.adjoint()
    }

    /// Orthonormal basis of `S ∩ span(safe band)`.
    pub fn safe_slice(&self) -> CMat {
        let unsafe_rows: Vec<usize> =
            (0..self.grade.ambient_dim()).filter(|&i| !self.grade.in_safe_band(&self.grade.multi_index(i))).collect();
        let coords = linalg::nullspace(&linalg::select_rows(&self.columns, &unsafe_rows), RANK_TOL);
        if coords.ncols() == 0 {
            return CMat::zeros(self.grade.ambient_dim(), 0);
        }
        linalg::range_basis(&(&self.columns * coords), SVD_CUTOFF)
    }

    /// `P_S T P_S` for each operator of the model tuple.
    pub fn restricted_tuple(&self) -> Vec<OperatorMatrix> {
        let p = self.projector();
        operators::model_tuple(self.grade)
            .into_iter()
            .map(|t| OperatorMatrix::on(self.grade, &p * t.matrix() * &p).expect("same grade"))
            .collect()
    }
}

fn monomials(grade: &Grade) -> Vec<(usize, Vec<usize>)> {
    let g1 = grade.with_coeff_dim(1);
    (0..g1.ambient_dim())
        .map(|i| {
            let m = g1.multi_index(i);
            (m.outer, m.inner)
        })
        .collect()
}

/// Span of all truncated monomial multiples `P_Cap(z^a z^b g_j)`, built on
/// `grade` with its outer cap raised by `working_margin`.
///
/// The result is exactly invariant under the truncated model tuple. The
/// returned basis lives on the working grade.
pub fn orbit_span(
    generators: &[HardyVector],
    grade: Grade,
    working_margin: usize,
    exec: Execution,
) -> Result<SubspaceBasis> {
    if generators.is_empty() {
        return Err(Error::EmptyGenerators);
    }
    let working = grade.with_outer_cap(grade.outer_cap + working_margin).validated()?;
    let mut lifted = Vec::with_capacity(generators.len());
    for (j, g) in generators.iter().enumerate() {
        if !g.grade().same_inner_space(&grade) {
            return Err(Error::GradeMismatch(format!("generator {j} has grade {:?}", g.grade())));
        }
        if g.degrees().0 > grade.outer_cap {
            return Err(Error::OutOfCap(format!("generator {j} exceeds the target outer cap {}", grade.outer_cap)));
        }
        if g.is_zero() {
            return Err(Error::ZeroGenerator(j));
        }
        lifted.push(g.regrade(working)?);
    }
    let monos = monomials(&working);
    let per_mono: Vec<Vec<nalgebra::DVector<linalg::C64>>> = par::map(exec, &monos, |(a, b)| {
        lifted
            .iter()
            .map(|g| g.shifted_truncated(*a, b))
            .filter(|v| !v.is_zero())
            .map(|v| {
                let d = v.to_dense();
                let nrm = d.norm();
                d.unscale(nrm)
            })
            .collect()
    });
    let cols: Vec<_> = per_mono.into_iter().flatten().collect();
    let mut span = CMat::zeros(working.ambient_dim(), cols.len());
    for (j, v) in cols.iter().enumerate() {
        span.set_column(j, v);
    }
    let b = linalg::range_basis(&span, SVD_CUTOFF);
    let provenance = Provenance {
        source: "orbit".into(),
        generators: generators.iter().map(|g| g.to_string()).collect(),
        target: grade,
        working_margin,
    };
    SubspaceBasis::canonical(working, &b, provenance)
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    /// `‖(I − P_S) T_k B_safe‖` with `B_safe` a basis of `S ∩ span(safe band)`.
    pub safe_residuals: Vec<f64>,
    /// Same with the full basis of `S`; informational.
    pub full_residuals: Vec<f64>,
    pub safe_slice_dim: usize,
    pub tolerance: f64,
    pub verdict: bool,
}

/// Joint invariance of `S` under `tuple`, judged on the safe slice of `S`.
pub fn check_invariant(s: &SubspaceBasis, tuple: &[OperatorMatrix]) -> Result<InvarianceReport> {
    let b = s.basis();
    let safe = s.safe_slice();
    let mut safe_residuals = Vec::new();
    let mut full_residuals = Vec::new();
    for t in tuple {
        if *t.domain() != s.grade || *t.codomain() != s.grade {
            return Err(Error::GradeMismatch("operator and subspace grades differ".into()));
        }
        let leak = |x: &CMat| {
            let tx = t.matrix() * x;
            linalg::op_norm(&(&tx - b * (b.adjoint() * &tx)))
        };
        safe_residuals.push(leak(&safe));
        full_residuals.push(leak(b));
    }
    let verdict = safe_residuals.iter().all(|&r| r < IDENTITY_TOL);
    Ok(InvarianceReport { safe_residuals, full_residuals, safe_slice_dim: safe.ncols(), tolerance: IDENTITY_TOL, verdict })
}

/// Wandering subspace `S ⊖ M_z S` with per-vector certification flags.
#[derive(Debug, Clone)]
pub struct Wandering {
    pub basis: SubspaceBasis,
    /// Vector touches the top `safe_margin` outer degrees.
    pub suspect: Vec<bool>,
    /// Norm of the compression of `W` to the top outer band.
    pub top_band_mass: f64,
}

impl Wandering {
    pub fn certified(&self) -> bool {
        !self.suspect.iter().any(|&s| s)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }
}

/// `W = S ⊖ M_z S`, computed by projecting `S` against an orthonormal basis
/// of `M_z S`.
pub fn wandering_subspace(s: &SubspaceBasis) -> Result<Wandering> {
    let g = s.grade;
    let mz = operators::shift_matrix(Axis::Outer, g)?;
    let inv = check_invariant(s, std::slice::from_ref(&mz))?;
    if !inv.verdict {
        return Err(Error::NotInvariant { what: "outer shift".into(), residual: inv.safe_residuals[0] });
    }
    let b = s.basis();
    let q = linalg::range_basis(&(mz.matrix() * b), SVD_CUTOFF);
    let rest = b - &q * (q.adjoint() * b);
    let w = linalg::range_basis(&rest, RANK_TOL);
    let mut provenance = s.provenance.clone();
    provenance.source = format!("wandering({})", provenance.source);
    let basis = SubspaceBasis::canonical(g, &w, provenance)?;

    let top = g.outer_cap.saturating_sub(g.safe_margin) + 1;
    let top_rows: Vec<usize> = (top.min(g.outer_cap + 1) * g.inner_dim()..g.ambient_dim()).collect();
    let top_block = linalg::select_rows(basis.basis(), &top_rows);
    let suspect = (0..basis.dim()).map(|j| top_block.column(j).norm() > IDENTITY_TOL).collect();
    Ok(Wandering { top_band_mass: linalg::op_norm(&top_block), suspect, basis })
}

/// `‖P_safe (P_S − Σ_m M_z^m P_W M_z^{*m}) P_safe‖`.
pub fn wold_reconstruction(s: &SubspaceBasis, w: &Wandering) -> Result<Report> {
    let g = s.grade;
    if *w.basis.grade() != g {
        return Err(Error::GradeMismatch("wandering basis on a different grade".into()));
    }
    let mz = operators::shift_matrix(Axis::Outer, g)?;
    let mut shifted = w.basis.basis().clone();
    let mut sum = CMat::zeros(g.ambient_dim(), g.ambient_dim());
    for _ in 0..=g.outer_cap {
        sum += &shifted * shifted.adjoint();
        shifted = mz.matrix() * shifted;
    }
    let diff = s.projector() - sum;
    let mut r = Report::new("wold_reconstruction", IDENTITY_TOL, g.trusted_degree());
    r.push("safe_band", linalg::op_norm(&linalg::principal_submatrix(&diff, &g.safe_indices())));
    Ok(r)
}

/// Closed span of `{M_z^a Θ η_j}` in the capped slice of `grade`.
///
/// `theta` must be an isometric multiplier with `grade.inner_dim()` rows.
pub fn build_from_theta(theta: &MatrixPolynomial, grade: Grade) -> Result<SubspaceBasis> {
    let q = grade.inner_dim();
    if theta.rows() != q {
        return Err(Error::Shape(format!("Θ has {} rows, inner space has dimension {q}", theta.rows())));
    }
    let iso = blh::is_isometric_multiplier(theta, None);
    if !iso.verdict {
        return Err(Error::NotIsometric { residual: iso.max_residual() });
    }
    let r = theta.cols();
    let mut span = CMat::zeros(grade.ambient_dim(), (grade.outer_cap + 1) * r);
    for a in 0..=grade.outer_cap {
        for (m, coeff) in theta.coeffs().iter().enumerate() {
            if a + m > grade.outer_cap {
                break;
            }
            span.view_mut(((a + m) * q, a * r), (q, r)).copy_from(coeff);
        }
    }
    let b = linalg::range_basis(&span, SVD_CUTOFF);
    let provenance = Provenance { source: "theta".into(), generators: Vec::new(), target: grade, working_margin: 0 };
    SubspaceBasis::canonical(grade, &b, provenance)
}

/// Principal angles between two subspaces of the same grade.
pub fn principal_angles(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<Vec<f64>> {
    if a.grade != b.grade {
        return Err(Error::GradeMismatch("principal angles across grades".into()));
    }
    Ok(linalg::principal_angles(a.basis(), b.basis()))
}

/// `‖(I − P_B) A‖`: how far `span(a)` is from lying inside `span(b)`.
pub fn containment_residual(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<f64> {
    if a.grade != b.grade {
        return Err(Error::GradeMismatch("containment across grades".into()));
    }
    let (x, y) = (a.basis(), b.basis());
    Ok(linalg::op_norm(&(x - y * (y.adjoint() * x))))
}
