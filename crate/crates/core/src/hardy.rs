//! Sparse vectors of the capped slice and the polydisc re-indexing.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::grade::{Grade, MultiIndex};
use crate::linalg::C64;

/// Finitely supported element of `H²_F(D)` inside a grade.
///
/// Invariant: every key passes `grade.check` and no stored value is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct HardyVector {
    grade: Grade,
    coeffs: BTreeMap<MultiIndex, C64>,
}

impl HardyVector {
    pub fn zero(grade: Grade) -> Self {
        HardyVector { grade, coeffs: BTreeMap::new() }
    }

    pub fn monomial(grade: Grade, idx: MultiIndex, value: C64) -> Result<Self> {
        let mut v = Self::zero(grade);
        v.add_term(idx, value)?;
        Ok(v)
    }

    pub fn from_terms<I: IntoIterator<Item = (MultiIndex, C64)>>(grade: Grade, terms: I) -> Result<Self> {
        let mut v = Self::zero(grade);
        for (idx, value) in terms {
            v.add_term(idx, value)?;
        }
        Ok(v)
    }

    /// Adds `value` at `idx`; entries that cancel to exactly zero are dropped.
    pub fn add_term(&mut self, idx: MultiIndex, value: C64) -> Result<()> {
        self.grade.check(&idx)?;
        let entry = self.coeffs.entry(idx).or_insert(C64::new(0.0, 0.0));
        *entry += value;
        self.coeffs.retain(|_, v| *v != C64::new(0.0, 0.0));
        Ok(())
    }

    pub fn grade(&self) -> &Grade {
        &self.grade
    }

    pub fn get(&self, idx: &MultiIndex) -> C64 {
        self.coeffs.get(idx).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &C64)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.values().map(|v| v.norm_sqr()).sum()
    }

    /// Largest outer and inner exponents in the support.
    pub fn degrees(&self) -> (usize, usize) {
        self.coeffs.keys().fold((0, 0), |(a, b), k| {
            (a.max(k.outer), b.max(k.inner.iter().copied().max().unwrap_or(0)))
        })
    }

    pub fn to_dense(&self) -> DVector<C64> {
        let mut out = DVector::zeros(self.grade.ambient_dim());
        for (k, v) in &self.coeffs {
            out[self.grade.index_of(k).expect("keys validated on insert")] = *v;
        }
        out
    }

    pub fn from_dense(grade: Grade, v: &DVector<C64>) -> Result<Self> {
        if v.len() != grade.ambient_dim() {
            return Err(Error::Shape(format!("vector of length {} for ambient dimension {}", v.len(), grade.ambient_dim())));
        }
        let coeffs = v
            .iter()
            .enumerate()
            .filter(|(_, x)| **x != C64::new(0.0, 0.0))
            .map(|(i, x)| (grade.multi_index(i), *x))
            .collect();
        Ok(HardyVector { grade, coeffs })
    }

    /// Re-expresses the vector in a grade with the same inner space and a
    /// different outer cap. Fails if the support does not fit.
    pub fn regrade(&self, target: Grade) -> Result<Self> {
        if !self.grade.same_inner_space(&target) {
            return Err(Error::GradeMismatch(format!("{:?} vs {:?}", self.grade, target)));
        }
        Self::from_terms(target, self.coeffs.iter().map(|(k, v)| (k.clone(), *v)))
    }

    /// `P_Cap(z^a z^b f)`: multiply by a monomial and drop what leaves the caps.
    pub fn shifted_truncated(&self, outer: usize, inner: &[usize]) -> Self {
        let g = self.grade;
        let mut out = Self::zero(g);
        for (k, v) in &self.coeffs {
            let a = k.outer + outer;
            if a > g.outer_cap {
                continue;
            }
            let b: Vec<usize> = k.inner.iter().zip(inner).map(|(x, y)| x + y).collect();
            if b.iter().any(|&x| x > g.inner_cap) {
                continue;
            }
            out.coeffs.insert(MultiIndex::new(a, b, k.coord), *v);
        }
        out
    }
}

/// `⟨f, g⟩`, conjugate-linear in the first slot.
pub fn inner_product(f: &HardyVector, g: &HardyVector) -> Result<C64> {
    if f.grade != g.grade {
        return Err(Error::GradeMismatch(format!("{:?} vs {:?}", f.grade, g.grade)));
    }
    Ok(f.coeffs.iter().map(|(k, v)| v.conj() * g.get(k)).sum())
}

fn write_coeff(f: &mut fmt::Formatter<'_>, v: C64) -> fmt::Result {
    if v.im == 0.0 {
        write!(f, "({:?})", v.re)
    } else if v.im < 0.0 {
        write!(f, "({:?}-{:?}i)", v.re, -v.im)
    } else {
        write!(f, "({:?}+{:?}i)", v.re, v.im)
    }
}

/// Prints in the polynomial grammar accepted by [`crate::parse::parse_polynomial`].
impl fmt::Display for HardyVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (t, (k, v)) in self.coeffs.iter().enumerate() {
            if t > 0 {
                write!(f, " + ")?;
            }
            write_coeff(f, *v)?;
            if k.outer > 0 {
                write!(f, "*z^{}", k.outer)?;
            }
            for (i, b) in k.inner.iter().enumerate() {
                if *b > 0 {
                    write!(f, "*z{}^{}", i + 1, b)?;
                }
            }
            if self.grade.coeff_dim > 1 {
                write!(f, "*e{}", k.coord)?;
            }
        }
        Ok(())
    }
}

/// Index on the `(n+1)`-variable polydisc side: exponents `(k_1..k_{n+1})`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PolydiscIndex {
    pub exponents: Vec<usize>,
    pub coord: usize,
}

/// Finitely supported element of `H²_E(D^{n+1})`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolydiscVector {
    pub coeffs: BTreeMap<PolydiscIndex, C64>,
}

/// `(k_1..k_{n+1}; e) ↦ (a = k_1; b = (k_2..k_{n+1}); e)`, coefficients unchanged.
pub fn reindex_to_disc(v: &PolydiscVector, grade: Grade) -> Result<HardyVector> {
    let mut out = HardyVector::zero(grade);
    for (k, val) in &v.coeffs {
        if k.exponents.len() != grade.n + 1 {
            return Err(Error::GradeMismatch(format!(
                "polydisc index with {} variables for n + 1 = {}",
                k.exponents.len(),
                grade.n + 1
            )));
        }
        let idx = MultiIndex::new(k.exponents[0], k.exponents[1..].to_vec(), k.coord);
        out.add_term(idx, *val)?;
    }
    Ok(out)
}

/// Inverse of [`reindex_to_disc`].
pub fn reindex_to_polydisc(f: &HardyVector) -> PolydiscVector {
    let coeffs = f
        .terms()
        .map(|(k, v)| {
            let mut exponents = Vec::with_capacity(k.inner.len() + 1);
            exponents.push(k.outer);
            exponents.extend_from_slice(&k.inner);
            (PolydiscIndex { exponents, coord: k.coord }, *v)
        })
        .collect();
    PolydiscVector { coeffs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn g() -> Grade {
        Grade::new(2, 3, 2, 2).unwrap()
    }

    #[test]
    fn inner_product_is_sesquilinear() {
        let f = HardyVector::monomial(g(), MultiIndex::new(1, vec![0, 2], 1), c(0.0, 2.0)).unwrap();
        let h = HardyVector::monomial(g(), MultiIndex::new(1, vec![0, 2], 1), c(1.0, 0.0)).unwrap();
        assert_eq!(inner_product(&f, &h).unwrap(), c(0.0, -2.0));
        assert_eq!(inner_product(&h, &f).unwrap(), c(0.0, 2.0));
    }

    #[test]
    fn mismatched_grades_rejected() {
        let f = HardyVector::zero(g());
        let h = HardyVector::zero(Grade::new(2, 3, 2, 1).unwrap());
        assert!(inner_product(&f, &h).is_err());
    }

    #[test]
    fn reindex_example() {
        let grade = Grade::new(1, 4, 4, 1).unwrap();
        let mut p = PolydiscVector::default();
        p.coeffs.insert(PolydiscIndex { exponents: vec![2, 1], coord: 0 }, c(1.0, 0.0));
        let f = reindex_to_disc(&p, grade).unwrap();
        assert_eq!(f.get(&MultiIndex::new(2, vec![1], 0)), c(1.0, 0.0));
        assert_eq!(reindex_to_polydisc(&f), p);
    }

    #[test]
    fn reindex_cap_error() {
        let grade = Grade::new(1, 4, 4, 1).unwrap();
        let mut p = PolydiscVector::default();
        p.coeffs.insert(PolydiscIndex { exponents: vec![5, 0], coord: 0 }, c(1.0, 0.0));
        assert!(matches!(reindex_to_disc(&p, grade), Err(Error::OutOfCap(_))));
    }

    #[test]
    fn dense_roundtrip_and_shift() {
        let f = HardyVector::from_terms(
            g(),
            [(MultiIndex::new(0, vec![0, 0], 0), c(1.0, 0.0)), (MultiIndex::new(3, vec![2, 1], 1), c(0.5, -1.0))],
        )
        .unwrap();
        assert_eq!(HardyVector::from_dense(g(), &f.to_dense()).unwrap(), f);
        let s = f.shifted_truncated(1, &[0, 0]);
        assert_eq!(s.terms().count(), 1);
        assert_eq!(s.get(&MultiIndex::new(1, vec![0, 0], 0)), c(1.0, 0.0));
    }
}
