//! File formats, configuration, reports and the command-line front end
//! around [`semreg_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod matching;
pub mod report;
pub mod sweep;

pub use error::{exit, CliError};
