//! Experiment harness around the rcds library: instance files, batch
//! evaluation grids, CSV results, ratio comparison, and the oracle report.

use thiserror::Error;

pub mod experiment;
pub mod io;

pub use experiment::{
    append_rows, compare_report, decimal9, evaluate_cell, oracle_report, parse_decimal9,
    read_rows, rows_to_string, run_experiment, Algorithm, ExperimentSpec, Model, ResultRow,
};
pub use io::{
    from_file, read_instance, to_file, write_instance, InstanceFile, LoadedInstance,
    ScenarioEntry, FORMAT_VERSION,
};

/// Process-level failure classes; each maps to a distinct exit code so
/// batch scripts can tell usage mistakes, bad inputs, size refusals, and
/// incomplete result sets apart.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Malformed(String),
    #[error("{0}")]
    Guard(String),
    #[error("{0}")]
    MissingBaseline(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Malformed(_) | CliError::Io(_) => 3,
            CliError::Guard(_) => 4,
            CliError::MissingBaseline(_) => 5,
        }
    }
}
