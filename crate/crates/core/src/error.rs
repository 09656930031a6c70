use thiserror::Error;

/// Errors produced anywhere in the verification pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("variable index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("jet order {0} exceeds the supported maximum of 4")]
    OrderTooHigh(usize),
    #[error("jet dimension {0} outside the supported range 1..=8")]
    DimOutOfRange(usize),
    #[error("jet shape mismatch: (dim {lhs_dim}, order {lhs_order}) vs (dim {rhs_dim}, order {rhs_order})")]
    ShapeMismatch {
        lhs_dim: usize,
        lhs_order: usize,
        rhs_dim: usize,
        rhs_order: usize,
    },
    #[error("division by a jet with zero constant term")]
    ZeroDivisor,
    #[error("{func} is undefined at {value}")]
    Domain { func: &'static str, value: f64 },
    #[error("jet budget exceeded: need order {needed}, have {available}")]
    JetBudget { needed: usize, available: usize },
    #[error("point {point:?} is outside the domain of `{label}`")]
    OutsideDomain { point: Vec<f64>, label: String },
    #[error("finite-difference stencil left the domain at {0:?}")]
    StencilOutsideDomain(Vec<f64>),
    #[error("metric `{label}` is not symmetric positive definite at {point:?}")]
    NotSpd { label: String, point: Vec<f64> },
    #[error("map is not horizontally weakly conformal at {point:?} (residual {residual:e})")]
    NotConformal { point: Vec<f64>, residual: f64 },
    #[error("critical point of the map at {0:?}")]
    CriticalPoint(Vec<f64>),
    #[error("p-tension is singular at a critical point for p = {0} < 4")]
    SingularPTension(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("adapted frame seeds became dependent at {0:?}")]
    PivotDegeneracy(Vec<f64>),
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("unknown oracle `{name}` for entry `{entry}`")]
    UnknownOracle { entry: String, name: String },
    #[error("empty point list")]
    EmptyPoints,
}

pub type Result<T> = std::result::Result<T, Error>;
