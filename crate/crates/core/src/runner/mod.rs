//! Config loading, experiment orchestration and CSV output.

pub mod config;
pub mod experiments;
pub mod table;

pub use config::{load_config, parse_config, ExperimentConfig, Source};
pub use experiments::{run_experiment, ExperimentKind, RunReport, MANIFEST};
pub use table::{write_csv, Cell, Table};
