//! Repeated trials, significance tests, report tables and the resumable
//! benchmark driver.

mod report;
mod runner;
mod stats;
mod trial;

pub use report::{emit_report, summarize, CellRecord, SummaryRow, SUMMARY_CSV, SUMMARY_MD};
pub use runner::{cell_path, run_bench, BenchOutcome, BenchPlan, CellFailure, PROTOCOL};
pub use stats::welch_t_test;
pub use trial::{run_single_trial, run_trials, trial_seed, TrialReport};
