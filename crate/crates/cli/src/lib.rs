//! Command-line front end: CSV ingestion, run configuration, reports,
//! chart rendering and the timing harness.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod svg;
pub mod timing;

pub use error::{CliError, CliResult};
