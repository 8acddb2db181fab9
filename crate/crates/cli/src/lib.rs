//! Batch front end: JSON problem descriptions in, deterministic JSON reports out.

pub mod config;
mod error;
pub mod project;
pub mod report;
pub mod tasks;
pub mod verify;

pub use error::{CliError, ExitStatus};
