//! Matrix-valued polynomials in the outer variable.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::serial::MatrixRecord;

/// `Σ_{m=0}^{M} C_m w^m` with all coefficients of one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial {
    coeffs: Vec<CMat>,
}

impl MatrixPolynomial {
    pub fn new(coeffs: Vec<CMat>) -> Result<Self> {
        let first = coeffs.first().ok_or_else(|| Error::Shape("polynomial needs a coefficient".into()))?;
        let shape = first.shape();
        if coeffs.iter().any(|c| c.shape() != shape) {
            return Err(Error::Shape("coefficients differ in shape".into()));
        }
        Ok(MatrixPolynomial { coeffs })
    }

    pub fn constant(m: CMat) -> Self {
        MatrixPolynomial { coeffs: vec![m] }
    }

    /// Number of stored coefficients minus one; trailing zeros count.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Highest index with a coefficient of norm above `tol`.
    pub fn effective_degree(&self, tol: f64) -> usize {
        self.coeffs.iter().rposition(|c| c.norm() > tol).unwrap_or(0)
    }

    pub fn rows(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn cols(&self) -> usize {
        self.coeffs[0].ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.coeffs[0].shape()
    }

    pub fn coeffs(&self) -> &[CMat] {
        &self.coeffs
    }

    pub fn coeff(&self, m: usize) -> Option<&CMat> {
        self.coeffs.get(m)
    }

    pub fn coeff_or_zero(&self, m: usize) -> CMat {
        self.coeffs.get(m).cloned().unwrap_or_else(|| CMat::zeros(self.rows(), self.cols()))
    }

    /// Coefficient of the product `self · rhs` at degree `m`.
    pub fn product_coeff(&self, rhs: &MatrixPolynomial, m: usize) -> CMat {
        let mut out = CMat::zeros(self.rows(), rhs.cols());
        for k in 0..=m.min(self.degree()) {
            if let Some(b) = rhs.coeffs.get(m - k) {
                out += &self.coeffs[k] * b;
            }
        }
        out
    }

    pub fn mul(&self, rhs: &MatrixPolynomial) -> Result<Self> {
        if self.cols() != rhs.rows() {
            return Err(Error::Shape(format!("{:?} times {:?}", self.shape(), rhs.shape())));
        }
        let deg = self.degree() + rhs.degree();
        Ok(MatrixPolynomial { coeffs: (0..=deg).map(|m| self.product_coeff(rhs, m)).collect() })
    }

    /// Drops coefficients above degree `m` (keeps at least the constant).
    pub fn truncated(&self, m: usize) -> Self {
        MatrixPolynomial { coeffs: self.coeffs[..=m.min(self.degree())].to_vec() }
    }

    /// Removes trailing coefficients of norm at most `tol`.
    pub fn trimmed(&self, tol: f64) -> Self {
        self.truncated(self.effective_degree(tol))
    }

    /// Largest coefficient norm over degrees `m ≥ from`.
    pub fn max_coeff_norm_from(&self, from: usize) -> f64 {
        self.coeffs.iter().skip(from).map(linalg::op_norm).fold(0.0, f64::max)
    }

    /// Block lower-triangular Toeplitz matrix of multiplication on
    /// polynomials of degree `≤ cap`, output truncated to degree `≤ cap`.
    pub fn toeplitz(&self, cap: usize) -> CMat {
        let (r, c) = self.shape();
        let mut out = CMat::zeros((cap + 1) * r, (cap + 1) * c);
        for i in 0..=cap {
            for j in 0..=i {
                if let Some(b) = self.coeffs.get(i - j) {
                    out.view_mut((i * r, j * c), (r, c)).copy_from(b);
                }
            }
        }
        out
    }

    pub fn map<F: Fn(&CMat) -> CMat>(&self, f: F) -> Result<Self> {
        Self::new(self.coeffs.iter().map(f).collect())
    }
}

#[derive(Serialize, Deserialize)]
struct PolyRecord {
    shape: [usize; 2],
    degree: usize,
    coeffs: Vec<MatrixRecord>,
}

impl Serialize for MatrixPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyRecord {
            shape: [self.rows(), self.cols()],
            degree: self.degree(),
            coeffs: self.coeffs.iter().map(MatrixRecord::from_matrix).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MatrixPolynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let rec = PolyRecord::deserialize(d)?;
        let coeffs = rec
            .coeffs
            .iter()
            .map(MatrixRecord::to_matrix)
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        if coeffs.len() != rec.degree + 1 {
            return Err(D::Error::custom("degree does not match coefficient count"));
        }
        let p = MatrixPolynomial::new(coeffs).map_err(D::Error::custom)?;
        if p.shape() != (rec.shape[0], rec.shape[1]) {
            return Err(D::Error::custom("shape header does not match coefficients"));
        }
        Ok(p)
    }
}
