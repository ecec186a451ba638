//! Experiment driver: configs, seeded campaigns, sweeps and CSV output.

pub mod config;
pub mod figures;
pub mod output;
pub mod simulate;
pub mod sweep;

pub use config::{ExperimentConfig, OUT_DIR_ENV};
pub use simulate::{aggregate, read_trials, simulate, simulate_to_dir, AggregateReport, Simulation, TrialRow};
pub use sweep::sweep;
