//! Library side of the benchmark harness: configuration files, sweep
//! execution, and report writers. The `comet` binary is a thin command
//! layer over these modules.

pub mod config;
pub mod experiment;
pub mod report;
