//! Command-line front end for the coverage simulator: JSON scenario
//! ingestion, batch execution, and artifact emission (trajectory CSV,
//! metrics JSON with full provenance, deterministic SVG plots).
//!
//! The binary is a thin dispatcher; everything it does is reachable from
//! this library so tests can drive commands in-process.

pub mod commands;
pub mod csvio;
pub mod error;
pub mod scenario_file;
pub mod svg;

pub use error::CliError;
