//! Command-line front end for the spinmotion toolkit: config ingestion,
//! subcommands for every pipeline, and deterministic CSV/JSON outputs.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod envelope;
