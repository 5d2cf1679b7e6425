//! Report pipeline behind the `smoothdist` binary: run configuration,
//! canonical serialization, and per-subcommand orchestration over the core
//! library. Kept as a library so integration tests can parse and re-emit
//! reports with the same writer the binary uses.

pub mod config;
pub mod format;
pub mod report;
