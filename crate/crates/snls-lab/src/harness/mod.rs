//! Experiment harness: configuration, the initial-data bank, Monte Carlo
//! ensemble estimation with common random numbers, the limit experiments,
//! and the CSV-emitting CLI.

pub mod bank;
pub mod cli;
pub mod config;
pub mod csv;
pub mod estimate;
pub mod experiments;

pub use bank::initial_datum;
pub use config::{DataFamily, RunConfig};
pub use estimate::{estimate_ensemble_norm, EnsembleNormEstimate};
pub use experiments::{
    dispersive_check, double_limit_experiment, noise_check, stability_sweep,
    stopping_time_experiment, symmetry_check, uniform_bound_experiment, DoubleLimitParams,
    DoubleLimitReport, StabilitySweepParams, StoppingTimeParams, StoppingTimeReport,
    UniformBoundParams, UniformBoundReport,
};
