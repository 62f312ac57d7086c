//! Library surface behind the `regime-vol-lab` binary: run configuration,
//! dataset ingestion, report writers and the subcommand implementations.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod report;
