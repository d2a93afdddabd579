//! Numerical toolkit for jointly invariant subspaces of vector-valued Hardy
//! spaces over the polydisc, at finite degree truncation.
//!
//! The space `H²_E(D^{n+1})` is viewed as `H²_F(D)` with `F = H²_E(D^n)`:
//! the first variable `z` is the outer shift and `z_1..z_n` act on `F`.
//! A [`Grade`] fixes the caps of the finite slice. Subspaces generated by
//! polynomials are built as truncated orbits, which are exactly invariant
//! under the truncated shifts; all identities are then checked coefficientwise
//! up to a trusted degree `D − safe_margin`.
//!
//! ```
//! use hardy_blh::{blh, parse_polynomial, subspace, Execution, Grade};
//!
//! let grade = Grade::new(1, 4, 4, 1).unwrap();
//! let g = parse_polynomial("z - z1", grade).unwrap();
//! let s = subspace::orbit_span(&[g], grade, 2, Execution::Sequential).unwrap();
//! let w = subspace::wandering_subspace(&s).unwrap();
//! assert!(w.certified());
//! let theta = blh::extract_theta(&s, &w, false).unwrap();
//! assert!(blh::is_isometric_multiplier(&theta, None).verdict);
//! ```

pub mod blh;
pub mod classify;
pub mod corpus;
pub mod error;
pub mod grade;
pub mod hardy;
pub mod linalg;
pub mod matpoly;
pub mod operators;
pub mod par;
pub mod parse;
pub mod report;
pub mod serial;
pub mod subspace;

pub use error::{Error, Result};
pub use grade::{Grade, MultiIndex};
pub use hardy::{inner_product, reindex_to_disc, reindex_to_polydisc, HardyVector, PolydiscIndex, PolydiscVector};
pub use matpoly::MatrixPolynomial;
pub use operators::{Axis, OperatorMatrix};
pub use par::Execution;
pub use parse::parse_polynomial;
pub use report::Report;
pub use subspace::{SubspaceBasis, Wandering};
