//! Experiment harness for the 1-bit ISAC transceiver library: spec loading,
//! sweep runners and CSV/JSON output.

pub mod app;
pub mod config;
pub mod experiments;
pub mod output;

pub use config::{load_config, parse_spec, ExperimentKind, ExperimentSpec};
pub use experiments::{run_experiment, Cell, Table};
pub use output::emit_results;
