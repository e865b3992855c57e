//! Experiment plumbing: batch sources, multi-seed runs, statistics and output.

pub mod batch;
pub mod emit;
pub mod experiment;
pub mod stats;

pub use batch::{load_raw_batch, make_batch, Batch, SyntheticBatchSpec};
pub use emit::{emit_results, load_summary, SummaryFile};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentResult, Method, SummaryRow, Workspace};
pub use stats::{kendall_tau, welch_ttest, WelchResult};
