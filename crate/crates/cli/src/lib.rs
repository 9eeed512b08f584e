//! Experiment driver for budget-constrained broadcast scheduling in
//! decentralized SGD: topology presets, configuration, seed sweeps and CSV
//! output.

pub mod config;
pub mod error;
pub mod experiment;
pub mod topology;

pub use config::{BudgetMode, EpsilonSpec, ExperimentConfig, ObjectiveKind, PolicyKind, PolicySpec};
pub use error::CliError;
pub use experiment::{execute, run_experiment, summarize, sweep_report, Experiment, RunResult};
pub use topology::TopologySpec;
