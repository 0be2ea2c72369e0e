//! Configuration ingestion and command orchestration for the
//! half-lightlike geometry verifier.

pub mod commands;
pub mod config;

/// Exit code for errors that prevent a verdict: bad configuration or a
/// geometry failure at a sample point.
pub const EXIT_ERROR: i32 = 2;
