//! Experiment runner: reads a TOML config, runs the declared experiment on a
//! thread pool of fixed size and writes CSV samples, a JSON/CSV report and a
//! manifest with checksums.

pub mod config;
pub mod error;
pub mod experiments;
pub mod recipes;
pub mod run;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{CliError, CliResult};
pub use experiments::{converge_experiment, ConvergeResult};
pub use run::{run, RunManifest, RunOptions, RunOutput};
