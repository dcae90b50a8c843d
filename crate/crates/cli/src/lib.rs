//! Library side of the `gradconf` command-line tool: run configuration,
//! dataset / conformation / report file formats, and the subcommand
//! implementations. The binary in `main.rs` is a thin argument parser over
//! [`commands`].

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod report;
pub mod xyz;
