use asc_jets::{ExprError, JetError};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("metric is not positive definite at the evaluation point")]
    SingularMetric,
    #[error("metric components are not symmetric: ({0}, {1})")]
    AsymmetricMetric(usize, usize),
    #[error("dimension must satisfy 3 <= d <= {max}, got {got}")]
    UnsupportedDimension { got: usize, max: usize },
    #[error("base point is not on the hypersurface: |s(p)| = {0:e}")]
    NotOnSurface(f64),
    #[error("defining function has vanishing gradient at the base point")]
    DegenerateNormal,
    #[error("tensor is not tangential: normal contraction {0:e}")]
    NotTangential(f64),
    #[error("{0} is not defined in this dimension")]
    NotDefined(&'static str),
    #[error("scale mismatch between operands")]
    ScaleMismatch,
    #[error("weight mismatch: {0} vs {1}")]
    WeightMismatch(f64, f64),
    #[error("slot structure mismatch")]
    SlotMismatch,
    #[error("symmetry check failed: residual {0:e}")]
    SymmetryViolated(f64),
    #[error("weight {0} is the Yamabe weight; use the projected variant")]
    YamabeWeight(f64),
    #[error("tractor is not orthogonal to X: X.V = {0:e}")]
    NotXOrthogonal(f64),
    #[error("tractor is not orthogonal to the normal tractor: h(V, N) = {0:e}")]
    NotNormalOrthogonal(f64),
    #[error("scale tractor is null at the base point")]
    NullScaleTractor,
    #[error("improvement at the critical order k = d is impossible")]
    CriticalOrder,
    #[error("order mismatch: {0}")]
    OrderMismatch(String),
    #[error("operation requires dimension {expected}, got {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("scale is not flat: curvature {0:e}")]
    NotFlatScale(f64),
    #[error("evaluation point must lie off the hypersurface with positive defining density, got {0:e}")]
    OffSurfaceRequired(f64),
    #[error("density is not a conformal unit: residual {0:e}")]
    NotConformalUnit(f64),
    #[error("probe is degenerate: {0}")]
    DegenerateProbe(String),
    #[error("operator needs weight {expected}, got {got}")]
    WrongWeight { expected: f64, got: f64 },
    #[error("order k = {k} is outside the canonical range 1..={max}")]
    OrderTooHigh { k: usize, max: usize },
    #[error("conformal factor must be positive, got {0}")]
    NonPositiveFactor(f64),
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
