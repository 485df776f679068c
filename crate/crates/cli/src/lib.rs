//! Command-line front-end: scenario files, power accounting, sweeps,
//! validation runs and table output.

pub mod app;
pub mod config;
pub mod error;
pub mod output;
pub mod power;
pub mod sweep;
pub mod validate;

pub use error::{CliError, Result};
