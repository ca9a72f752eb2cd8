//! Experiment runner behind the `ris-corr` binary.
//!
//! Each subcommand resolves an [`ExperimentConfig`] (defaults, then an
//! optional JSON file, then flags), runs one pipeline and writes its tables.

pub mod config;
pub mod error;
pub mod experiments;
pub mod table;

pub use config::{Experiment, ExperimentConfig, Format, Overrides};
pub use error::CliError;
pub use experiments::{run, RunOutput};
pub use table::{read_csv, write_table, Cell, Table};
