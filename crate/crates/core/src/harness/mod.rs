//! Scenario files, Monte Carlo orchestration and result files.

mod config;
mod output;
mod run;
pub mod stats;

pub use config::{GridFile, Overrides, Scenario};
pub use output::{write_run, write_summary_csv, SummaryRow};
pub use run::{run_scenario, sweep, Delta, RunRecord, RunResult, Summary, SweepEntry, TraceRow};
