//! Sweep harness: run configurations, reference solutions and CSV records.

pub mod config;
pub mod output;
pub mod reference;
pub mod runner;

pub use config::{Cli, ErrorNorm, RunConfig, SweepConfig};
pub use output::{write_csv, CSV_HEADER};
pub use reference::{ReferenceCache, ReferenceSource};
pub use runner::{run_one, run_sweep, RunRecord, SweepOutcome};
