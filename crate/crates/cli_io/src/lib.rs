//! Data ingestion, model persistence and the command implementations
//! behind the `salcwm` binary.

pub mod commands;
pub mod data;
mod error;
pub mod persist;

pub use data::{load_csv, standardize, Scaling, Table};
pub use error::CliError;
pub use persist::ModelFile;
