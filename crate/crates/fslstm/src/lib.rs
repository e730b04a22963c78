//! File formats, data ingestion and the command-line driver for
//! [`fslstm_core`].
//!
//! Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical
//! failure.

pub mod checkpoint;
pub mod commands;
pub mod config;
mod error;
pub mod io;
pub mod results;

pub use config::RunConfig;
pub use error::CliError;
