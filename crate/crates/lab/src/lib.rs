//! Batch driver for `lmc-core`: TOML run configurations, the instance
//! corpus, report files and the command line.

pub mod config;
pub mod emit;
pub mod error;
pub mod run;

pub use config::RunConfig;
pub use emit::emit_reports;
pub use error::{LabError, Result};
pub use run::{run, RunOutcome, RunReport, Stage};
