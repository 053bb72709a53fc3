//! Experiment runner around `seqest-core`: configuration handling, sweep
//! execution, and deterministic CSV emission.

pub mod config;
pub mod experiment;
pub mod output;

pub use config::{parse_flag_tokens, ConfigError, ExperimentConfig, ExperimentKind};
pub use experiment::{run_experiment, ExperimentError};
pub use output::{csv_bytes, emit_csv, emit_csv_to, CsvCell, ResultTable};
