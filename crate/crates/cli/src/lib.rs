//! Command-line front end: declarative protocol specs, validation grids and
//! deterministic JSON/CSV reports.

pub mod args;
pub mod commands;
pub mod error;
pub mod report;
pub mod spec;
pub mod value;

pub use error::{CliError, CliResult};
