//! Experiment driver for the `fracharm` binary: configuration, artifact
//! writers and the experiments behind each subcommand.

pub mod checks;
pub mod commands;
pub mod config;
pub mod experiments;
pub mod output;
