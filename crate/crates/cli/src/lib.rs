//! Command-line front end for `pstlab`: scenario configuration, the named
//! experiments and their on-disk artifacts.

pub mod cli;
pub mod config;
pub mod device;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::ScenarioConfig;
pub use error::CliError;
