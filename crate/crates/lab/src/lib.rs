//! Experiment harness around `pmwell-core`: TOML configuration, file
//! formats, run manifests and the experiment pipelines behind the `pmwell`
//! command-line tool.

pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod manifest;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{LabError, Result};
pub use experiments::{
    dichotomy_table, run_experiment, sweep, tune_initial_energy, Agreement, Branch, DichotomyRow, EnergyClass,
    EnergyTarget, Prediction, Summary, Tuned,
};
