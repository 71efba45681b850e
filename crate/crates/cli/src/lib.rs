//! Benchmark orchestration behind the `redactkit` command.

pub mod bench;
pub mod config;

pub use bench::{run_benchmark, BenchError, BenchOutcome, RecordRow};
pub use config::{BenchMode, ConfigError, RunConfig};
