//! Front end for `trapchain-core`: TOML run configuration, report tables
//! written as CSV or JSON, parameter sweeps, the built-in design table and
//! the oracle validation suite. The `trapchain` binary wraps these.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod suite;
pub mod sweep;
pub mod table1;

pub use config::RunConfig;
pub use error::{CliError, Result};
pub use output::{Cell, Format, Report, Table};
