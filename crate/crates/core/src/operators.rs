//! Truncated shifts, projections, the defect operator and commutator checks.
//!
//! Operators are dense matrices in the lexicographic basis of a grade. The
//! truncated shifts are nilpotent partial isometries; their adjoints are the
//! exact backward shifts.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grade::Grade;
use crate::linalg::{self, c, CMat, RANK_TOL};

/// Default tolerance for operator identities.
pub const IDENTITY_TOL: f64 = 1e-10;

/// Which variable a shift multiplies by: the outer `z` or inner `z_i` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Axis {
    Outer,
    Inner(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    domain: Grade,
    codomain: Grade,
    matrix: CMat,
}

impl OperatorMatrix {
    pub fn new(domain: Grade, codomain: Grade, matrix: CMat) -> Result<Self> {
        if matrix.shape() != (codomain.ambient_dim(), domain.ambient_dim()) {
            return Err(Error::Shape(format!(
                "matrix {:?} for {} -> {}",
                matrix.shape(),
                domain.ambient_dim(),
                codomain.ambient_dim()
            )));
        }
        Ok(OperatorMatrix { domain, codomain, matrix })
    }

    pub fn on(grade: Grade, matrix: CMat) -> Result<Self> {
        Self::new(grade, grade, matrix)
    }

    pub fn identity(grade: Grade) -> Self {
        OperatorMatrix { domain: grade, codomain: grade, matrix: linalg::identity(grade.ambient_dim()) }
    }

    pub fn domain(&self) -> &Grade {
        &self.domain
    }

    pub fn codomain(&self) -> &Grade {
        &self.codomain
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        OperatorMatrix { domain: self.codomain, codomain: self.domain, matrix: self.matrix.adjoint() }
    }

    /// `self ∘ rhs`.
    pub fn compose(&self, rhs: &OperatorMatrix) -> Result<Self> {
        if rhs.codomain != self.domain {
            return Err(Error::GradeMismatch(format!("compose {:?} after {:?}", self.domain, rhs.codomain)));
        }
        Ok(OperatorMatrix { domain: rhs.domain, codomain: self.codomain, matrix: &self.matrix * &rhs.matrix })
    }

    pub fn sub(&self, rhs: &OperatorMatrix) -> Result<Self> {
        if self.domain != rhs.domain || self.codomain != rhs.codomain {
            return Err(Error::GradeMismatch("difference of operators on different grades".into()));
        }
        Ok(OperatorMatrix { domain: self.domain, codomain: self.codomain, matrix: &self.matrix - &rhs.matrix })
    }

    /// `P_safe A P_safe` as a matrix on the safe indices (square operators only).
    pub fn safe_compression(&self) -> CMat {
        let idx = self.domain.safe_indices();
        linalg::principal_submatrix(&self.matrix, &idx)
    }

    /// `A P_safe`: the operator applied to safe-band inputs.
    pub fn on_safe_inputs(&self) -> CMat {
        linalg::select_columns(&self.matrix, &self.domain.safe_indices())
    }
}

/// Truncated multiplication by the chosen variable.
pub fn shift_matrix(axis: Axis, grade: Grade) -> Result<OperatorMatrix> {
    if let Axis::Inner(i) = axis {
        if i == 0 || i > grade.n {
            return Err(Error::AxisOutOfRange { axis: i, n: grade.n });
        }
    }
    let dim = grade.ambient_dim();
    let mut m = CMat::zeros(dim, dim);
    for j in 0..dim {
        let mut idx = grade.multi_index(j);
        let fits = match axis {
            Axis::Outer => {
                idx.outer += 1;
                idx.outer <= grade.outer_cap
            }
            Axis::Inner(i) => {
                idx.inner[i - 1] += 1;
                idx.inner[i - 1] <= grade.inner_cap
            }
        };
        if fits {
            let i = grade.index_of(&idx).expect("in caps");
            m[(i, j)] = c(1.0, 0.0);
        }
    }
    Ok(OperatorMatrix { domain: grade, codomain: grade, matrix: m })
}

/// `(M_z, M_{κ_1}, …, M_{κ_n})` on the grade.
pub fn model_tuple(grade: Grade) -> Vec<OperatorMatrix> {
    let mut out = vec![shift_matrix(Axis::Outer, grade).expect("outer axis")];
    out.extend((1..=grade.n).map(|i| shift_matrix(Axis::Inner(i), grade).expect("axis in range")));
    out
}

/// Inner shift `κ_i` on the capped inner space (a `q × q` matrix).
pub fn inner_shift(grade: Grade, axis: usize) -> Result<CMat> {
    if axis == 0 || axis > grade.n {
        return Err(Error::AxisOutOfRange { axis, n: grade.n });
    }
    let q = grade.inner_dim();
    let mut m = CMat::zeros(q, q);
    for j in 0..q {
        let (mut b, e) = grade.inner_multi_index(j);
        b[axis - 1] += 1;
        if b[axis - 1] <= grade.inner_cap {
            m[(grade.inner_index(&b, e), j)] = c(1.0, 0.0);
        }
    }
    Ok(m)
}

/// Orthogonal projection `B B^*` for an orthonormal basis `B` of the grade.
pub fn projection(grade: Grade, basis: &CMat) -> Result<OperatorMatrix> {
    if basis.nrows() != grade.ambient_dim() {
        return Err(Error::Shape(format!("basis has {} rows for ambient {}", basis.nrows(), grade.ambient_dim())));
    }
    let residual = linalg::gram_residual(basis);
    if residual > IDENTITY_TOL {
        return Err(Error::NonOrthonormal { residual });
    }
    Ok(OperatorMatrix { domain: grade, codomain: grade, matrix: basis * basis.adjoint() })
}

fn check_tuple(tuple: &[OperatorMatrix]) -> Result<Grade> {
    let first = tuple.first().ok_or_else(|| Error::Shape("empty operator tuple".into()))?;
    let g = first.domain;
    for t in tuple {
        if t.domain != g || t.codomain != g {
            return Err(Error::GradeMismatch("tuple operators act on different grades".into()));
        }
    }
    Ok(g)
}

/// `Σ_{k ∈ {0,1}^m} (−1)^{|k|} T^k (T^k)^*`, symmetrized so it is exactly
/// self-adjoint.
pub fn defect_operator(tuple: &[OperatorMatrix]) -> Result<OperatorMatrix> {
    let g = check_tuple(tuple)?;
    let m = tuple.len();
    if m > 16 {
        return Err(Error::Shape("defect operator limited to 16 operators".into()));
    }
    let dim = g.ambient_dim();
    let mut total = linalg::identity(dim);
    for mask in 1u32..(1 << m) {
        let mut prod = linalg::identity(dim);
        for (i, t) in tuple.iter().enumerate() {
            if mask & (1 << i) != 0 {
                prod = &prod * &t.matrix;
            }
        }
        let term = &prod * prod.adjoint();
        if mask.count_ones() % 2 == 1 {
            total -= term;
        } else {
            total += term;
        }
    }
    let sym = (&total + total.adjoint()) * c(0.5, 0.0);
    Ok(OperatorMatrix { domain: g, codomain: g, matrix: sym })
}

#[derive(Debug, Clone, Serialize)]
pub struct DefectReport {
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub tolerance: f64,
    /// Ratio of the smallest kept to the largest dropped singular value.
    pub gap: f64,
}

/// Rank of the defect operator compressed to the safe band.
pub fn defect_rank(tuple: &[OperatorMatrix], tol: f64) -> Result<DefectReport> {
    let d = defect_operator(tuple)?;
    Ok(rank_report(&d.safe_compression(), tol))
}

pub(crate) fn rank_report(m: &CMat, tol: f64) -> DefectReport {
    let s = linalg::singular_values(m);
    let rank = s.iter().filter(|&&x| x > tol).count();
    let kept = if rank > 0 { s[rank - 1] } else { f64::INFINITY };
    let dropped = s.get(rank).copied().unwrap_or(0.0);
    let gap = if dropped == 0.0 { f64::INFINITY } else { kept / dropped };
    DefectReport { singular_values: s, rank, tolerance: tol, gap }
}

/// Default rank tolerance re-exported for callers.
pub const DEFECT_TOL: f64 = RANK_TOL;

#[derive(Debug, Clone, Serialize)]
pub struct PairResidual {
    pub i: usize,
    pub j: usize,
    /// `‖P_safe [T_i, T_j] P_safe‖`
    pub commutator: f64,
    /// `‖P_safe [T_i^*, T_j] P_safe‖`
    pub adjoint_commutator: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutationReport {
    pub pairs: Vec<PairResidual>,
    pub tolerance: f64,
    pub commuting: bool,
    pub doubly_commuting: bool,
}

impl CommutationReport {
    pub fn max_adjoint_commutator(&self) -> f64 {
        self.pairs.iter().map(|p| p.adjoint_commutator).fold(0.0, f64::max)
    }

    pub fn max_commutator(&self) -> f64 {
        self.pairs.iter().map(|p| p.commutator).fold(0.0, f64::max)
    }
}

/// Commutator and adjoint-commutator norms for every ordered pair `i ≠ j`,
/// compressed to the safe band of `grade`.
pub fn commutation_residuals(tuple: &[OperatorMatrix], grade: Grade, tol: f64) -> Result<CommutationReport> {
    let g = check_tuple(tuple)?;
    if g != grade {
        return Err(Error::GradeMismatch("tuple grade differs from the requested grade".into()));
    }
    let idx = grade.safe_indices();
    let mut pairs = Vec::new();
    for i in 0..tuple.len() {
        for j in 0..tuple.len() {
            if i == j {
                continue;
            }
            let (a, b) = (&tuple[i].matrix, &tuple[j].matrix);
            let comm = a * b - b * a;
            let adj = a.adjoint() * b - b * a.adjoint();
            pairs.push(PairResidual {
                i,
                j,
                commutator: linalg::op_norm(&linalg::principal_submatrix(&comm, &idx)),
                adjoint_commutator: linalg::op_norm(&linalg::principal_submatrix(&adj, &idx)),
            });
        }
    }
    let commuting = pairs.iter().all(|p| p.commutator < tol);
    let doubly_commuting = commuting && pairs.iter().all(|p| p.adjoint_commutator < tol);
    Ok(CommutationReport { pairs, tolerance: tol, commuting, doubly_commuting })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn is_partial_isometry(m: &CMat) -> bool {
        let p = m.adjoint() * m;
        (&p * &p - &p).norm() < 1e-14
    }

    #[test]
    fn shifts_are_nilpotent_partial_isometries() {
        let g = Grade::new(2, 3, 2, 2).unwrap();
        for t in model_tuple(g) {
            assert!(is_partial_isometry(t.matrix()));
        }
        let mz = shift_matrix(Axis::Outer, g).unwrap();
        let mut p = linalg::identity(g.ambient_dim());
        for _ in 0..=g.outer_cap {
            p = &p * mz.matrix();
        }
        assert_eq!(p.norm(), 0.0);
        let k = shift_matrix(Axis::Inner(2), g).unwrap();
        let mut p = linalg::identity(g.ambient_dim());
        for _ in 0..=g.inner_cap {
            p = &p * k.matrix();
        }
        assert_eq!(p.norm(), 0.0);
    }

    #[test]
    fn axis_range_checked() {
        let g = Grade::new(1, 2, 2, 1).unwrap();
        assert!(matches!(shift_matrix(Axis::Inner(2), g), Err(Error::AxisOutOfRange { .. })));
        assert!(matches!(shift_matrix(Axis::Inner(0), g), Err(Error::AxisOutOfRange { .. })));
    }

    #[test]
    fn model_defect_is_constant_projection() {
        for de in 1..=3 {
            let g = Grade::new(2, 3, 2, de).unwrap();
            let d = defect_operator(&model_tuple(g)).unwrap();
            let mut expect = CMat::zeros(g.ambient_dim(), g.ambient_dim());
            for e in 0..de {
                expect[(e, e)] = c(1.0, 0.0);
            }
            assert!((d.matrix() - expect).norm() < 1e-14);
            let r = defect_rank(&model_tuple(g), DEFECT_TOL).unwrap();
            assert_eq!(r.rank, de);
            assert!(r.gap > 1e6);
        }
    }

    #[test]
    fn defect_is_exactly_self_adjoint() {
        let g = Grade::new(1, 3, 3, 1).unwrap();
        let t = model_tuple(g);
        let p = projection(g, &linalg::range_basis(&(t[0].matrix() + t[1].matrix()), 1e-10)).unwrap();
        let skew: Vec<OperatorMatrix> = t.iter().map(|x| p.compose(x).unwrap().compose(&p).unwrap()).collect();
        let d = defect_operator(&skew).unwrap();
        assert_eq!(linalg::hermitian_defect(d.matrix()), 0.0);
    }

    #[test]
    fn model_tuple_doubly_commutes() {
        let g = Grade::new(2, 3, 3, 1).unwrap();
        let r = commutation_residuals(&model_tuple(g), g, IDENTITY_TOL).unwrap();
        assert!(r.doubly_commuting);
        assert_eq!(r.max_adjoint_commutator(), 0.0);
    }

    #[test]
    fn repeated_outer_shift_is_not_doubly_commuting() {
        let g = Grade::new(1, 4, 4, 1).unwrap();
        let mz = shift_matrix(Axis::Outer, g).unwrap();
        let r = commutation_residuals(&[mz.clone(), mz], g, IDENTITY_TOL).unwrap();
        assert!(r.commuting);
        assert!(!r.doubly_commuting);
        assert!((r.max_adjoint_commutator() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn projection_rejects_non_orthonormal() {
        let g = Grade::new(1, 1, 1, 1).unwrap();
        let b = CMat::from_element(4, 1, c(1.0, 0.0));
        assert!(matches!(projection(g, &b), Err(Error::NonOrthonormal { .. })));
    }

    proptest! {
        #[test]
        fn adjoint_is_backward_shift(n in 1usize..3, d in 0usize..4, cap in 0usize..3, de in 1usize..3, ax in 0usize..3) {
            let g = Grade::new(n, d, cap, de).unwrap();
            let axis = if ax == 0 || ax > n { Axis::Outer } else { Axis::Inner(ax) };
            let t = shift_matrix(axis, g).unwrap();
            let ta = t.adjoint();
            for j in 0..g.ambient_dim() {
                let idx = g.multi_index(j);
                let mut back = idx.clone();
                let ok = match axis {
                    Axis::Outer => back.outer.checked_sub(1).map(|v| back.outer = v).is_some(),
                    Axis::Inner(i) => back.inner[i - 1].checked_sub(1).map(|v| back.inner[i - 1] = v).is_some(),
                };
                let col = ta.matrix().column(j);
                if ok {
                    let i = g.index_of(&back).unwrap();
                    prop_assert_eq!(col[i], c(1.0, 0.0));
                    prop_assert_eq!(col.iter().filter(|x| x.norm() > 0.0).count(), 1);
                } else {
                    prop_assert_eq!(col.norm(), 0.0);
                }
            }
        }

        #[test]
        fn shifts_pairwise_doubly_commute(n in 1usize..3, d in 1usize..4, cap in 1usize..3) {
            let g = Grade::new(n, d, cap, 1).unwrap();
            let t = model_tuple(g);
            for i in 0..t.len() {
                for j in 0..t.len() {
                    if i == j { continue; }
                    let (a, b) = (t[i].matrix(), t[j].matrix());
                    prop_assert_eq!((a * b - b * a).norm(), 0.0);
                    prop_assert_eq!((a.adjoint() * b - b * a.adjoint()).norm(), 0.0);
                }
            }
        }
    }
}
