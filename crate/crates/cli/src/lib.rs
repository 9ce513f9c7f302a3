//! Batch verification harness for square-metric curvature identities:
//! configuration, deterministic sampling runner, and report serialization.

pub mod config;
pub mod report;
pub mod runner;
