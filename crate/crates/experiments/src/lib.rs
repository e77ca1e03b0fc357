//! Experiment presets, Monte Carlo engine and output formats behind the
//! `vcpsense` command-line tool.

pub mod config;
pub mod engine;
pub mod output;
pub mod presets;
pub mod simulate;

pub use config::{load_config, ExperimentConfig};
pub use output::{emit_csv, ResultRow, ResultTable};
pub use presets::{prepare, Overrides, PRESETS};
