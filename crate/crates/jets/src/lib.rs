//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] is the Taylor polynomial of a smooth function about a base
//! point, truncated at a fixed total degree. Each jet also records the
//! highest degree whose coefficients are trustworthy (`valid_order`) and a
//! structural lower bound on the degree of its first nonzero coefficient
//! (`low_order`). Products of a jet vanishing to order `m` with another jet
//! need `m` fewer orders from the second factor, so tracking both bounds lets
//! long recursions keep their precision budget.
//!
//! Expressions in the small language of [`expr`] are lifted onto jets with
//! [`lift`].

mod error;
pub mod expr;
mod jet;
mod table;

pub use error::JetError;
pub use expr::{lift, parse, Exponent, ExprAst, ExprError, UnaryOp, BinaryOp};
pub use jet::Jet;
