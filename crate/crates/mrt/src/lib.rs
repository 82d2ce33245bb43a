//! Command-line layer over `mrt-core`: TOML run configs, the five
//! subcommands and CSV output with a commented header.

pub mod commands;
pub mod config;
pub mod output;
pub mod validate;
