//! Config-driven experiment runner behind the `adaterm` command.

mod config;
mod run;
mod summary;
mod verify;

pub use config::{
    Experiment, ExperimentConfig, ExperimentKind, HarnessConfig, OptimizerSection, Plan, SCHEMA_VERSION,
};
pub use run::{run_config, run_experiment, ExperimentOutcome};
pub use summary::{
    find_trial_files, median, read_rows, summarize, summarize_dir, write_rows, ResultRow, Stats, SummaryRow,
};
pub use verify::{check_mlp, check_tdist, check_test_functions, verify_gradients, GradientCheck};

use crate::error::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

/// Process exit status for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::Invariant(_) => EXIT_INVARIANT,
        _ => EXIT_NUMERICAL,
    }
}
