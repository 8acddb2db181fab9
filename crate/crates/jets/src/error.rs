use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("insufficient jet order: need {needed}, have {available}")]
    InsufficientOrder { needed: usize, available: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("division by a jet with zero constant term")]
    DivisionByZero,
    #[error("jet shape mismatch: ({0}, {1}) vs ({2}, {3})")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("jet does not vanish at the base point or has a degenerate gradient")]
    NotVanishing,
}
