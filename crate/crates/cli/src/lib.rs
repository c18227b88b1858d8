//! Experiment runner for electric quantum walks: config parsing, subcommands
//! and the identity suite behind `ewalk verify`.

pub mod commands;
pub mod config;
pub mod suite;
