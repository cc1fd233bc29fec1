use crate::elements::ElementFamily;

/// Errors produced by mesh construction, element setup, assembly and solves.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate domain [{x_min}, {x_max}] x [{y_min}, {y_max}]")]
    InvalidDomain {
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
    },
    #[error("mesh needs at least one cell per direction, got {nx} x {ny}")]
    InvalidMeshSize { nx: usize, ny: usize },
    #[error("{what} index {index} out of range (count {count})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        count: usize,
    },
    #[error("Gauss-Legendre order {0} outside 1..=20")]
    QuadratureOrder(usize),
    #[error("element {family:?} is not unisolvent: DoF matrix condition {condition:e}")]
    SingularElement { family: ElementFamily, condition: f64 },
    #[error("derivative order {0} is not supported (max 2)")]
    DerivativeOrder(usize),
    #[error("field does not match the space: {0}")]
    SpaceMismatch(String),
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("relative residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },
    #[error("malformed table: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
