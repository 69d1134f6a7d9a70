//! Experiment configuration, replicated runs and result files.

pub mod config;
pub mod experiment;
pub mod output;
pub mod presets;

pub use config::{load_config, parse_config, ExperimentConfig, Population};
pub use experiment::{
    derive_seed, run_cells, run_experiment, run_experiment_with, AggregateReport, Cell, ExperimentResult, Retain, Stat,
};
pub use output::{
    emit_outputs, read_transcript, recompute_report, write_checkpoints, write_transcript, OutputError, OutputFormats,
};
pub use presets::{preset, PRESET_NAMES};
