//! Command-line front end, file formats, reports and thread-parallel
//! drivers for `stabilab-core`.

pub mod cli;
pub mod error;
pub mod format;
pub mod instance;
pub mod parallel;
pub mod report;

pub use error::CliError;
