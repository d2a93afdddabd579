//! Dense complex linear algebra: nalgebra storage, faer factorizations.
//!
//! All rank decisions use absolute singular-value cutoffs; callers normalize
//! their inputs so that the relevant scale is one.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

/// Singular-value cutoff used when orthonormalizing spanning sets.
pub const SVD_CUTOFF: f64 = 1e-10;
/// Cutoff for rank decisions on operators (defect ranks, intertwiner spaces).
pub const RANK_TOL: f64 = 1e-8;
/// Canonical-basis pivot threshold; see [`canonical_basis`].
const CANON_PIVOT: f64 = 1e-3;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Thin SVD with singular values in descending order. `v` holds right
/// singular vectors as columns, so `a = u * diag(s) * v^*`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

pub fn svd(a: &CMat) -> Svd {
    let (m, n) = a.shape();
    if m.min(n) == 0 {
        return Svd { u: zeros(m, 0), s: Vec::new(), v: zeros(n, 0) };
    }
    // nalgebra's complex bidiagonal SVD can stall with O(1e-3) reconstruction
    // error on rank-deficient inputs, so the factorization runs in faer.
    let d = to_faer(a).thin_svd().expect("SVD of a finite matrix converges");
    let s = d.S().column_vector().iter().map(|x| x.re).collect();
    Svd { u: from_faer(d.U()), s, v: from_faer(d.V()) }
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    let (m, n) = a.shape();
    if m.min(n) == 0 {
        return Vec::new();
    }
    to_faer(a).singular_values().expect("SVD of a finite matrix converges")
}

fn to_faer(a: &CMat) -> faer::Mat<C64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: faer::MatRef<'_, C64>) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Largest singular value; zero for empty matrices.
pub fn op_norm(a: &CMat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Orthonormal basis of the column space, keeping singular values above `tol`.
pub fn range_basis(a: &CMat, tol: f64) -> CMat {
    let d = svd(a);
    let r = d.s.iter().take_while(|&&s| s > tol).count();
    d.u.columns(0, r).into_owned()
}

/// Orthonormal basis of the nullspace `{x : a x = 0}` with cutoff `tol`.
///
/// Tall inputs are reduced through QR first so that the SVD runs on a square
/// factor; wide inputs are zero-padded so the full right factor is available.
pub fn nullspace(a: &CMat, tol: f64) -> CMat {
    let (m, n) = a.shape();
    if n == 0 {
        return zeros(0, 0);
    }
    if m == 0 {
        return identity(n);
    }
    let square = if m > n {
        a.clone().qr().r()
    } else if m < n {
        let mut p = zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let d = svd(&square);
    let keep: Vec<usize> = (0..n).filter(|&k| d.s[k] <= tol).collect();
    let mut out = zeros(n, keep.len());
    for (j, &k) in keep.iter().enumerate() {
        out.set_column(j, &d.v.column(k));
    }
    out
}

/// Basis-independent orthonormal basis of `span(b)`.
///
/// `b` must have orthonormal columns. Runs Gram–Schmidt over the projected
/// coordinate vectors `P e_k` in index order and keeps those whose residual
/// exceeds a fixed pivot threshold. Any residual direction leaves some
/// coordinate with residual at least `1/sqrt(dim)`, so the pivot never drops
/// rank for ambient dimensions below 10^6.
pub fn canonical_basis(b: &CMat) -> CMat {
    let (m, r) = b.shape();
    let mut q: Vec<nalgebra::DVector<C64>> = Vec::with_capacity(r);
    for k in 0..m {
        if q.len() == r {
            break;
        }
        let coeffs = b.row(k).adjoint();
        let mut v = b * coeffs;
        for _ in 0..2 {
            for u in &q {
                let p = u.dotc(&v);
                v.axpy(-p, u, C64::new(1.0, 0.0));
            }
        }
        let nv = v.norm();
        if nv > CANON_PIVOT {
            v.unscale_mut(nv);
            q.push(v);
        }
    }
    let mut out = zeros(m, q.len());
    for (j, u) in q.iter().enumerate() {
        out.set_column(j, u);
    }
    out
}

/// `‖b^* b − I‖` for a matrix with (supposedly) orthonormal columns.
pub fn gram_residual(b: &CMat) -> f64 {
    let g = b.adjoint() * b;
    op_norm(&(g - identity(b.ncols())))
}

/// Principal angles between `span(a)` and `span(b)`, ascending.
///
/// Both inputs must have orthonormal columns. Cosines come from `a^* b` and
/// sines from `(I − a a^*) b`, so small angles are resolved to rounding.
pub fn principal_angles(a: &CMat, b: &CMat) -> Vec<f64> {
    let k = a.ncols().min(b.ncols());
    if k == 0 {
        return Vec::new();
    }
    let (small, big) = if a.ncols() <= b.ncols() { (a, b) } else { (b, a) };
    let mut cos = singular_values(&(big.adjoint() * small));
    cos.resize(k, 0.0);
    let resid = small - big * (big.adjoint() * small);
    let mut sin = singular_values(&resid);
    sin.resize(k, 0.0);
    sin.reverse();
    let mut out: Vec<f64> = cos.iter().zip(&sin).map(|(c, s)| s.atan2(*c)).collect();
    out.sort_by(|x, y| x.total_cmp(y));
    out
}

/// Nearest unitary in Frobenius norm (polar factor `u v^*`).
pub fn polar_unitary(x: &CMat) -> CMat {
    let d = svd(x);
    &d.u * d.v.adjoint()
}

/// Frobenius inner product `tr(a^* b)`.
pub fn frob_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Largest Hermitian-part deviation, `‖a − a^*‖`.
pub fn hermitian_defect(a: &CMat) -> f64 {
    op_norm(&(a - a.adjoint()))
}

/// Rows/columns restricted to `idx` (principal submatrix).
pub fn principal_submatrix(a: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])])
}

pub fn select_rows(a: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(idx.len(), a.ncols(), |i, j| a[(idx[i], j)])
}

pub fn select_columns(a: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(a.nrows(), idx.len(), |i, j| a[(i, idx[j])])
}
