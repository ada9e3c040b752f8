//! Experiment harness: configuration, reference solutions with an on-disk
//! cache, the parallel `(method, N, seed)` grid and its CSV output.

pub mod cache;
pub mod config;
pub mod error;
pub mod experiment;
pub mod record;

pub use cache::{CacheStatus, ReferenceCache};
pub use config::{ExperimentConfig, Overrides};
pub use error::{BenchError, Result};
pub use experiment::{prepare, run_experiment, ExperimentOutput, Prepared};
pub use record::RunRow;
