//! Experiment configuration, Monte-Carlo runs and result files.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;

pub use config::{CccpOverrides, ExperimentConfig, Scheme, SchemeSpec};
pub use output::{read_csv, write_csv, write_outputs, CsvRow, OutputPaths, CSV_HEADER};
pub use presets::{preset, PRESETS};
pub use run::{compare_regularization, run_experiment, ExperimentOutput, RegularizationGain, RowStatus, RunOptions, SummaryRow, TrialRecord};
