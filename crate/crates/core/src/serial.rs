//! Serialized forms: complex numbers as `[re, im]`, matrices row-major with
//! an explicit shape header.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub shape: [usize; 2],
    pub data: Vec<[f64; 2]>,
}

impl MatrixRecord {
    pub fn from_matrix(m: &CMat) -> Self {
        let (r, c) = m.shape();
        let mut data = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                let v = m[(i, j)];
                data.push([v.re, v.im]);
            }
        }
        MatrixRecord { shape: [r, c], data }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        let [r, c] = self.shape;
        if self.data.len() != r * c {
            return Err(Error::Shape(format!("{} entries for shape {r}x{c}", self.data.len())));
        }
        Ok(CMat::from_fn(r, c, |i, j| {
            let [re, im] = self.data[i * c + j];
            C64::new(re, im)
        }))
    }
}

pub fn complex_pair(v: C64) -> [f64; 2] {
    [v.re, v.im]
}

/// `serialize_with` helper for optional matrices.
pub fn opt_matrix<S: serde::Serializer>(m: &Option<CMat>, s: S) -> std::result::Result<S::Ok, S::Error> {
    m.as_ref().map(MatrixRecord::from_matrix).serialize(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn row_major_roundtrip() {
        let m = CMat::from_row_slice(2, 3, &[c(1.0, 0.0), c(2.0, 1.0), c(3.0, 0.0), c(4.0, 0.0), c(5.0, 0.0), c(6.0, -1.0)]);
        let r = MatrixRecord::from_matrix(&m);
        assert_eq!(r.shape, [2, 3]);
        assert_eq!(r.data[1], [2.0, 1.0]);
        assert_eq!(r.data[5], [6.0, -1.0]);
        assert_eq!(r.to_matrix().unwrap(), m);
    }

    #[test]
    fn bad_length_rejected() {
        let r = MatrixRecord { shape: [2, 2], data: vec![[0.0, 0.0]; 3] };
        assert!(r.to_matrix().is_err());
    }
}
