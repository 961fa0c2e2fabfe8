//! The experiment harness: configuration, grid execution, theory
//! verification, and result emission.

mod config;
mod output;
mod runner;
mod verify;

pub use config::{
    DatasetConfig, ExperimentConfig, Mode, ModelConfig, OutputFormats, SplitRatios, VerifySettings,
};
pub use output::{emit_increasing_n, emit_results, emit_verification, write_manifest, RESULTS_CSV_HEADER};
pub use runner::{
    resolve_jobs, run_experiment, run_increasing_n, FractionObservation, FractionRow,
    IncreasingNTable, ResultRow, ResultsTable,
};
pub use verify::{run_theory_verification, PropertyResult, RegretRow, VerificationReport};
