//! Trials, experiments, statistics and result files.

pub mod experiment;
pub mod io;
pub mod stats;
pub mod trial;

pub use experiment::{run_experiment, trial_seed, ExperimentConfig};
pub use trial::{run_trial, run_trial_traced, BodySource, TrialConfig, TrialRecord, TrialRun};
