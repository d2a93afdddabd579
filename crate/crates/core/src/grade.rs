//! Truncation grades and the dense lexicographic index of the capped slice.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_safe_margin() -> usize {
    1
}

/// A finite slice of `H²_F(D)` with `F = H²_E(D^n)`: outer degree `≤ D`,
/// each inner degree `≤ N`, coefficient slot in `[0, d_E)`.
///
/// Dense order is lexicographic on `(a, b_1..b_n, e)`, so the index of a
/// multi-index is `a * inner_dim + inner_index(b, e)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grade {
    pub n: usize,
    #[serde(rename = "D")]
    pub outer_cap: usize,
    #[serde(rename = "N")]
    pub inner_cap: usize,
    #[serde(rename = "d_E")]
    pub coeff_dim: usize,
    #[serde(default = "default_safe_margin")]
    pub safe_margin: usize,
}

/// Index of a basis vector `z^a z_1^{b_1} … z_n^{b_n} ⊗ e_coord`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex {
    pub outer: usize,
    pub inner: Vec<usize>,
    pub coord: usize,
}

impl MultiIndex {
    pub fn new(outer: usize, inner: Vec<usize>, coord: usize) -> Self {
        MultiIndex { outer, inner, coord }
    }

    pub fn total_degree(&self) -> usize {
        self.outer + self.inner.iter().sum::<usize>()
    }
}

impl Grade {
    pub fn new(n: usize, outer_cap: usize, inner_cap: usize, coeff_dim: usize) -> Result<Self> {
        Grade { n, outer_cap, inner_cap, coeff_dim, safe_margin: 1 }.validated()
    }

    pub fn with_safe_margin(mut self, m: usize) -> Self {
        self.safe_margin = m;
        self
    }

    pub fn with_outer_cap(mut self, d: usize) -> Self {
        self.outer_cap = d;
        self
    }

    pub fn with_coeff_dim(mut self, d: usize) -> Self {
        self.coeff_dim = d;
        self
    }

    /// Checks `n ≥ 1`, `d_E ≥ 1` and that the ambient dimension fits a `usize`.
    pub fn validated(self) -> Result<Self> {
        if self.n == 0 {
            return Err(Error::InvalidGrade("need at least one inner variable".into()));
        }
        if self.coeff_dim == 0 {
            return Err(Error::InvalidGrade("coefficient space must be nonzero".into()));
        }
        self.checked_ambient_dim()
            .ok_or_else(|| Error::InvalidGrade("ambient dimension overflows".into()))?;
        Ok(self)
    }

    /// Rejects grades whose ambient dimension exceeds `limit`, before any
    /// dense allocation happens.
    pub fn check_budget(&self, limit: usize) -> Result<()> {
        match self.checked_ambient_dim() {
            Some(dim) if dim <= limit => Ok(()),
            Some(dim) => Err(Error::TooLarge { dim, limit }),
            None => Err(Error::TooLarge { dim: usize::MAX, limit }),
        }
    }

    fn checked_ambient_dim(&self) -> Option<usize> {
        let mut q = self.coeff_dim;
        for _ in 0..self.n {
            q = q.checked_mul(self.inner_cap.checked_add(1)?)?;
        }
        q.checked_mul(self.outer_cap.checked_add(1)?)
    }

    /// `(N+1)^n d_E`, the dimension of the capped inner space.
    pub fn inner_dim(&self) -> usize {
        (self.inner_cap + 1).pow(self.n as u32) * self.coeff_dim
    }

    /// `(D+1)(N+1)^n d_E`.
    pub fn ambient_dim(&self) -> usize {
        (self.outer_cap + 1) * self.inner_dim()
    }

    /// Same shifts and inner space, possibly different outer cap or margin.
    pub fn same_inner_space(&self, other: &Grade) -> bool {
        self.n == other.n && self.inner_cap == other.inner_cap && self.coeff_dim == other.coeff_dim
    }

    /// Same variables and caps, possibly different coefficient spaces.
    pub fn same_caps(&self, other: &Grade) -> bool {
        self.n == other.n && self.inner_cap == other.inner_cap && self.outer_cap == other.outer_cap
    }

    pub fn inner_index(&self, inner: &[usize], coord: usize) -> usize {
        let mut idx = 0;
        for &b in inner {
            idx = idx * (self.inner_cap + 1) + b;
        }
        idx * self.coeff_dim + coord
    }

    pub fn check(&self, idx: &MultiIndex) -> Result<()> {
        if idx.inner.len() != self.n {
            return Err(Error::GradeMismatch(format!(
                "multi-index has {} inner exponents, grade has n = {}",
                idx.inner.len(),
                self.n
            )));
        }
        if idx.coord >= self.coeff_dim {
            return Err(Error::CoordOutOfRange { coord: idx.coord, dim: self.coeff_dim });
        }
        if idx.outer > self.outer_cap || idx.inner.iter().any(|&b| b > self.inner_cap) {
            return Err(Error::OutOfCap(format!(
                "{:?} exceeds D = {}, N = {}",
                idx, self.outer_cap, self.inner_cap
            )));
        }
        Ok(())
    }

    pub fn index_of(&self, idx: &MultiIndex) -> Result<usize> {
        self.check(idx)?;
        Ok(idx.outer * self.inner_dim() + self.inner_index(&idx.inner, idx.coord))
    }

    pub fn multi_index(&self, mut i: usize) -> MultiIndex {
        let q = self.inner_dim();
        let outer = i / q;
        i %= q;
        let coord = i % self.coeff_dim;
        i /= self.coeff_dim;
        let mut inner = vec![0; self.n];
        for slot in inner.iter_mut().rev() {
            *slot = i % (self.inner_cap + 1);
            i /= self.inner_cap + 1;
        }
        MultiIndex { outer, inner, coord }
    }

    /// Inner multi-index and coefficient slot of an inner-space index.
    pub fn inner_multi_index(&self, i: usize) -> (Vec<usize>, usize) {
        let m = self.multi_index(i);
        (m.inner, m.coord)
    }

    /// True when `a ≤ D − m_s` and every `b_i ≤ N − m_s`.
    pub fn in_safe_band(&self, idx: &MultiIndex) -> bool {
        idx.outer + self.safe_margin <= self.outer_cap
            && idx.inner.iter().all(|&b| b + self.safe_margin <= self.inner_cap)
    }

    pub fn safe_indices(&self) -> Vec<usize> {
        (0..self.ambient_dim()).filter(|&i| self.in_safe_band(&self.multi_index(i))).collect()
    }

    /// Highest coefficient degree whose identities are asserted, `D − m_s`.
    pub fn trusted_degree(&self) -> Option<usize> {
        self.outer_cap.checked_sub(self.safe_margin)
    }

    /// The safe band is nonempty.
    pub fn has_safe_band(&self) -> bool {
        self.outer_cap >= self.safe_margin && self.inner_cap >= self.safe_margin
    }

    pub fn iter(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        (0..self.ambient_dim()).map(move |i| self.multi_index(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dimensions() {
        let g = Grade::new(2, 3, 2, 2).unwrap();
        assert_eq!(g.inner_dim(), 18);
        assert_eq!(g.ambient_dim(), 72);
    }

    #[test]
    fn rejects_bad_grades() {
        assert!(Grade::new(0, 3, 3, 1).is_err());
        assert!(Grade::new(1, 3, 3, 0).is_err());
        assert!(Grade::new(40, usize::MAX / 2, 10, 1).is_err());
    }

    #[test]
    fn order_is_lexicographic() {
        let g = Grade::new(2, 2, 1, 2).unwrap();
        let all: Vec<MultiIndex> = g.iter().collect();
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(all.len(), g.ambient_dim());
    }

    #[test]
    fn cap_errors() {
        let g = Grade::new(1, 4, 4, 1).unwrap();
        assert!(matches!(g.index_of(&MultiIndex::new(5, vec![0], 0)), Err(Error::OutOfCap(_))));
        assert!(matches!(
            g.index_of(&MultiIndex::new(0, vec![0], 1)),
            Err(Error::CoordOutOfRange { .. })
        ));
        assert!(matches!(g.index_of(&MultiIndex::new(0, vec![0, 0], 0)), Err(Error::GradeMismatch(_))));
    }

    #[test]
    fn safe_band_counts() {
        let g = Grade::new(1, 4, 4, 2).unwrap();
        assert_eq!(g.safe_indices().len(), 4 * 4 * 2);
        assert_eq!(g.trusted_degree(), Some(3));
        assert!(!Grade::new(1, 0, 4, 1).unwrap().has_safe_band());
    }

    proptest! {
        #[test]
        fn index_roundtrip(n in 1usize..4, d in 0usize..5, cap in 0usize..4, de in 1usize..4, seed in any::<u64>()) {
            let g = Grade::new(n, d, cap, de).unwrap();
            let i = (seed as usize) % g.ambient_dim();
            let m = g.multi_index(i);
            prop_assert_eq!(g.index_of(&m).unwrap(), i);
        }
    }
}
