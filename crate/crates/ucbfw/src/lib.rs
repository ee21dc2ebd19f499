//! Experiment runner for `ucbfw-core`: YAML configs, parallel seeds, CSV and
//! JSON output.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{load_config, parse_config, ConfigError, Experiment, ExperimentConfig};
pub use output::{build_rows, csv_bytes, format_sci, summary_json, write_csv, write_summary, CSV_HEADER};
pub use runner::{analyze, run_experiment, Analysis};
