//! Desk-scale simulation laboratory for the one-dimensional defocusing
//! (stochastic) nonlinear Schrödinger equation and its truncated subcritical
//! approximations.
//!
//! The crate provides:
//!
//! * a periodic spectral grid with the free Schrödinger group as an exact
//!   multiplier ([`grid`], [`propagator`]);
//! * Lebesgue and space-time (Strichartz) norm functionals ([`norms`],
//!   [`trajectory`]);
//! * the defocusing power nonlinearity with a smooth norm-driven truncation
//!   ([`nonlinearity`]);
//! * finite-rank trace-class noise with exact Stratonovich phase sampling
//!   and its Itô correction field ([`noise`]);
//! * mass-conserving split-step integrators for the whole approximation
//!   family, Duhamel-residual checks and stability experiments
//!   ([`integrator`]);
//! * the symmetry group action, transported solutions and profile-synthesis
//!   diagnostics ([`symmetry`]);
//! * a Monte Carlo harness with common random numbers, ensemble norm
//!   estimators, the limit experiments, and a CSV-emitting CLI ([`harness`]).
//!
//! Start with the `examples/` directory: each file is a runnable tour of one
//! capability (`cargo run --release -p snls-lab --example free_evolution`).
//! The same machinery is scriptable through the thin `snls` binary.

pub mod error;
pub mod field;
pub mod grid;
pub mod harness;
pub mod integrator;
pub mod noise;
pub mod nonlinearity;
pub mod norms;
pub mod propagator;
pub mod rng;
pub mod symmetry;
pub mod trajectory;

pub use error::{Error, Result};
pub use field::Field;
pub use grid::SpectralGrid;
pub use integrator::{
    duhamel_residual, solve, solve_forced, solve_path, stability_experiment, Scheme, SolverConfig,
    StabilityReport,
};
pub use noise::{build_noise_model, NoiseIncrement, NoiseModel};
pub use nonlinearity::{
    apply_nonlinearity, smooth_cutoff, CutoffProfile, CutoffSpec, NonlinearityExponent,
};
pub use norms::{is_admissible, AdmissiblePair, StrichartzAccumulator};
pub use propagator::{check_dispersive_decay, free_evolve, strichartz_ratio, DispersiveFitReport};
pub use symmetry::{
    group_apply, mass_decoupling_defect, pairwise_strichartz_product, synthesize_sequence,
    transported_solution, ProfileSet, SymmetryParams,
};
pub use trajectory::Trajectory;
