//! File formats, the hand store, session reports, parallel drivers and the
//! command-line tool built on `tableintel-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod jsonl;
pub mod parallel;
pub mod report;
pub mod store;

pub use error::CliError;
pub use tableintel_core as core;
