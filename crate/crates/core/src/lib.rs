//! Conformal hypersurface geometry on Taylor jets.

mod error;
pub mod catalog;
pub mod geometry;
pub mod hypersurface;
pub mod laplacians;
pub mod tensor;
pub mod tractor;
pub mod yamabe;

pub use error::{Error, Result};
