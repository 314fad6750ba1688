//! Command-line front end for the `fairdti` library.
//!
//! Every subcommand writes its artifacts plus a `run.json` provenance record
//! into the output directory. Failures print one JSON error document on
//! stderr and exit nonzero.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod cli;
pub mod commands;
pub mod config;
pub mod registry;

pub use cli::{main_with, Cli};
pub use config::RunConfig;
