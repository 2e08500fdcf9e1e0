//! Command-line surface and file formats for `gapscope-core`: instance and
//! driver JSON, CSV tables, JSON reports, a rayon grid executor and the
//! figure reproductions.

pub mod cli;
pub mod error;
pub mod io;
pub mod parallel;
pub mod report;
pub mod reproduce;
pub mod run;

pub use error::{CliError, Result};
