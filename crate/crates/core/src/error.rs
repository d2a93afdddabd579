use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grade: {0}")]
    InvalidGrade(String),

    #[error("grade mismatch: {0}")]
    GradeMismatch(String),

    #[error("index outside the truncation caps: {0}")]
    OutOfCap(String),

    #[error("coefficient slot {coord} out of range for d_E = {dim}")]
    CoordOutOfRange { coord: usize, dim: usize },

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("basis is not orthonormal (Gram residual {residual:.3e})")]
    NonOrthonormal { residual: f64 },

    #[error("empty generator set")]
    EmptyGenerators,

    #[error("generator {0} is zero after truncation")]
    ZeroGenerator(usize),

    #[error("subspace is not invariant: {what} (residual {residual:.3e})")]
    NotInvariant { what: String, residual: f64 },

    #[error("{count} wandering vector(s) touch the top outer band; pass force to extract anyway")]
    UncertifiedWandering { count: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("not an isometric multiplier (residual {residual:.3e})")]
    NotIsometric { residual: f64 },

    #[error("multiplier is not contractive (norm {norm:.6})")]
    NotContractive { norm: f64 },

    #[error("not a module map (commutator residual {residual:.3e})")]
    NotModuleMap { residual: f64 },

    #[error("axis {axis} out of range for n = {n}")]
    AxisOutOfRange { axis: usize, n: usize },

    #[error("ambient dimension {dim} exceeds the limit {limit}")]
    TooLarge { dim: usize, limit: usize },

    #[error("degenerate truncation: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
