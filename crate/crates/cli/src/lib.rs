//! Config-driven runner for the `gibbs` engine.
//!
//! A run reads one TOML file, executes one command and writes JSON-lines or
//! CSV outputs plus a `manifest.json` into the output directory. Every
//! record carries the SHA-256 of the config text and the master seed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;

pub use run::{parse_config, run_file, run_text, ErrorKind, RunError, RunOptions, RunOutcome};
