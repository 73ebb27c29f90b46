//! The thin command-line front end: one subcommand per experiment, a TOML
//! config, and CSV output. Exit codes: 0 for a PASS verdict, 2 for a FAIL
//! verdict, 1 for execution or usage errors.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::integrator::solve_path;

use super::bank::initial_datum;
use super::config::RunConfig;
use super::csv::{fmt, fmt_bool, CsvTable};
use super::experiments::{
    dispersive_check, double_limit_experiment, noise_check, stability_sweep,
    stopping_time_experiment, symmetry_check, uniform_bound_experiment, DoubleLimitParams,
    StabilitySweepParams, StoppingTimeParams, UniformBoundParams,
};

#[derive(Parser, Debug)]
#[command(
    name = "snls",
    version,
    about = "Split-step laboratory for the 1D defocusing (stochastic) NLS approximation family",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the Monte Carlo path count.
    #[arg(long, global = true)]
    paths: Option<usize>,

    /// Output directory for CSV tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker thread count (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate a single trajectory and emit its norm time series.
    Solve,
    /// Sweep the (epsilon, truncation) grid and test uniform boundedness.
    UniformBound,
    /// Distance matrix to the corner run under common random numbers.
    DoubleLimit,
    /// Stopping-time ordering and pre-stopping pathwise agreement.
    StoppingTime,
    /// Perturbation response sweep across several decades.
    Stability,
    /// Dispersive decay fit and Strichartz ratio sampling.
    DispersiveCheck,
    /// Group action unitarity, transport invariance, decoupling diagnostics.
    SymmetryCheck,
    /// Noise model diagnostics: orthonormality, rotation invariance,
    /// increment statistics.
    NoiseCheck,
}

/// Entry point used by the `snls` binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems (including unknown subcommands) are execution
            // errors for scripting purposes, not FAIL verdicts.
            let _ = e.print();
            return 1;
        }
    };
    match execute(cli) {
        Ok(pass) => {
            if pass {
                0
            } else {
                2
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.monte_carlo.seed = seed;
    }
    if let Some(paths) = cli.paths {
        cfg.monte_carlo.paths = paths;
        cfg.stopping_time.paths = paths;
    }
    if let Some(out) = &cli.out {
        cfg.output.directory = out.display().to_string();
    }
    cfg.validate()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&cli.command, &cfg))
}

fn dispatch(command: &Command, cfg: &RunConfig) -> Result<bool> {
    let out_dir = PathBuf::from(&cfg.output.directory);
    let seed = cfg.monte_carlo.seed;
    let grid_info = (cfg.grid.half_length, cfg.grid.points);
    match command {
        Command::Solve => {
            let grid = cfg.grid.build()?;
            let family = cfg
                .bank
                .families
                .first()
                .cloned()
                .unwrap_or(super::config::DataFamily::Zero);
            let l2 = cfg.bank.l2_norms.first().cloned().unwrap_or(1.0);
            let u0 = initial_datum(grid.clone(), family, l2)?;
            let noise = if cfg.noise.rank > 0 {
                Some(cfg.noise.build(grid)?)
            } else {
                None
            };
            let solver = crate::integrator::SolverConfig {
                exponent: crate::nonlinearity::NonlinearityExponent::new(
                    cfg.solver.epsilons.first().cloned().unwrap_or(0.0),
                    cfg.solver.couplings.first().cloned().unwrap_or(1.0),
                )?,
                cutoff: crate::nonlinearity::CutoffSpec::new(
                    cfg.solver.truncation_scales.first().cloned().unwrap_or(f64::INFINITY),
                    cfg.solver.offset,
                )?,
                dt: cfg.solver.dt,
                horizon: cfg.solver.horizon,
                noise,
                scheme: cfg.solver.scheme,
                record_stride: usize::MAX,
                seed,
            };
            let traj = solve_path(&u0, &solver, 0)?;
            let mut table = CsvTable::new("solve", seed, 1, grid_info);
            table.comment("family", family.name());
            table.comment("l2_norm", fmt(l2));
            table.comment(
                "stopping_time",
                traj.stopping_time().map(fmt).unwrap_or_else(|| "none".into()),
            );
            table.columns(&["time", "l2_norm", "l10_norm_pow5", "trunc_factor"]);
            for i in 0..traj.times().len() {
                let factor = if i < traj.trunc_factors().len() {
                    traj.trunc_factors()[i]
                } else {
                    f64::NAN
                };
                table.row(vec![
                    fmt(traj.times()[i]),
                    fmt(traj.l2_norms()[i]),
                    fmt(traj.l10_pow5()[i]),
                    fmt(factor),
                ]);
            }
            table.write(&out_dir.join("solve.csv"))?;
            println!("solve: wrote {} nodes", traj.times().len());
            Ok(true)
        }
        Command::UniformBound => {
            let stochastic = cfg.noise.rank > 0;
            let params = UniformBoundParams::from_run_config(cfg, stochastic)?;
            let report = uniform_bound_experiment(&params)?;
            let mut table = CsvTable::new("uniform-bound", seed, params.paths, grid_info);
            table.comment("stochastic", fmt_bool(report.stochastic));
            table.comment("all_finite", fmt_bool(report.all_finite));
            table.comment("log_slope_vs_epsilon", fmt(report.log_slope));
            table.comment("log_slope_std_error", fmt(report.log_slope_se));
            table.comment("cell_ratio", fmt(report.cell_ratio));
            table.comment(
                "frac_x2_nonincreasing_in_scale",
                fmt(report.frac_nonincreasing_in_scale),
            );
            table.comment("verdict", if report.pass { "PASS" } else { "FAIL" });
            table.columns(&[
                "family", "l2_norm", "coupling", "epsilon", "scale", "x", "x_se", "x2", "x2_se",
                "paths",
            ]);
            for r in &report.rows {
                table.row(vec![
                    r.family.name().into(),
                    fmt(r.l2_norm),
                    fmt(r.coupling),
                    fmt(r.epsilon),
                    fmt(r.scale),
                    fmt(r.x.value),
                    fmt(r.x.std_error),
                    fmt(r.x2.value),
                    fmt(r.x2.std_error),
                    r.x.paths.to_string(),
                ]);
            }
            table.write(&out_dir.join("uniform_bound.csv"))?;
            println!(
                "uniform-bound: {} cells, slope {:.3} (se {:.3}), ratio {:.3} -> {}",
                report.rows.len(),
                report.log_slope,
                report.log_slope_se,
                report.cell_ratio,
                if report.pass { "PASS" } else { "FAIL" }
            );
            Ok(report.pass)
        }
        Command::DoubleLimit => {
            let params = DoubleLimitParams::from_run_config(cfg)?;
            let report = double_limit_experiment(&params)?;
            let mut table = CsvTable::new("double-limit", seed, params.paths, grid_info);
            table.comment("corner_d_ref", fmt(report.corner_d_ref));
            table.comment("corner_gap", fmt(report.corner_gap));
            table.comment("corner_bound", fmt(report.corner_bound));
            table.comment("monotone_in_scale", fmt_bool(report.monotone_in_scale));
            table.comment("monotone_in_epsilon", fmt_bool(report.monotone_in_epsilon));
            table.comment("verdict", if report.pass { "PASS" } else { "FAIL" });
            table.columns(&[
                "epsilon", "scale", "d_ref", "d_ref_se", "d_crit", "d_crit_se", "paths",
            ]);
            for r in &report.rows {
                table.row(vec![
                    fmt(r.epsilon),
                    fmt(r.scale),
                    fmt(r.d_ref.value),
                    fmt(r.d_ref.std_error),
                    fmt(r.d_critical.value),
                    fmt(r.d_critical.std_error),
                    r.d_ref.paths.to_string(),
                ]);
            }
            table.write(&out_dir.join("double_limit.csv"))?;
            println!(
                "double-limit: corner gap {:.3e} <= bound {:.3e}, monotone ({}, {}) -> {}",
                report.corner_gap,
                report.corner_bound,
                report.monotone_in_scale,
                report.monotone_in_epsilon,
                if report.pass { "PASS" } else { "FAIL" }
            );
            Ok(report.pass)
        }
        Command::StoppingTime => {
            let params = StoppingTimeParams::from_run_config(cfg)?;
            let report = stopping_time_experiment(&params)?;
            let mut table = CsvTable::new("stopping-time", seed, params.paths, grid_info);
            table.comment("violations", report.violations.to_string());
            table.comment("max_pre_tau_gap", fmt(report.max_pre_tau_gap));
            table.comment("verdict", if report.pass { "PASS" } else { "FAIL" });
            table.columns(&[
                "path",
                "scale_low",
                "scale_high",
                "tau_low",
                "tau_high",
                "ordering_violated",
                "pre_tau_gap",
            ]);
            for r in &report.rows {
                table.row(vec![
                    r.path.to_string(),
                    fmt(r.scale_low),
                    fmt(r.scale_high),
                    fmt(r.tau_low),
                    fmt(r.tau_high),
                    fmt_bool(r.ordering_violated),
                    fmt(r.pre_tau_gap),
                ]);
            }
            table.write(&out_dir.join("stopping_time.csv"))?;
            println!(
                "stopping-time: {} violations, max pre-tau gap {:.3e} -> {}",
                report.violations,
                report.max_pre_tau_gap,
                if report.pass { "PASS" } else { "FAIL" }
            );
            Ok(report.pass)
        }
        Command::Stability => {
            let params = StabilitySweepParams::from_run_config(cfg)?;
            let report = stability_sweep(&params)?;
            let mut table = CsvTable::new("stability", seed, 1, grid_info);
            table.comment("ratio_spread", fmt(report.ratio_spread));
            table.comment("verdict", if report.pass { "PASS" } else { "FAIL" });
            table.columns(&["delta", "initial_gap", "response", "ratio"]);
            for r in &report.rows {
                table.row(vec![
                    fmt(r.delta),
                    fmt(r.initial_gap),
                    fmt(r.response),
                    fmt(r.ratio),
                ]);
            }
            table.write(&out_dir.join("stability.csv"))?;
            println!(
                "stability: ratio spread {:.3} -> {}",
                report.ratio_spread,
                if report.pass { "PASS" } else { "FAIL" }
            );
            Ok(report.pass)
        }
        Command::DispersiveCheck => {
            let report = dispersive_check(cfg)?;
            let mut table = CsvTable::new(
                "dispersive-check",
                seed,
                1,
                (cfg.dispersive.half_length, cfg.dispersive.points),
            );
            table.comment("fitted_exponent", fmt(report.fit.fitted_exponent));
            table.comment("expected_exponent", fmt(report.expected_exponent));
            table.comment("fit_residual", fmt(report.fit.fit_residual));
            table.comment("sup_pair_max_defect", fmt(report.sup_pair_max_defect));
            table.comment("strichartz_max_ratio", fmt(report.strichartz_max_ratio));
            table.comment(
                "scaling_invariance_defect",
                fmt(report.scaling_invariance_defect),
            );
            table.comment("verdict", if report.pass { "PASS" } else { "FAIL" });
            table.columns(&["time", "norm"]);
            for (t, n) in report.fit.times.iter().zip(&report.fit.norms) {
                table.row(vec![fmt(*t), fmt(*n)]);
            }
            table.write(&out_dir.join("dispersive.csv"))?;
            println!(
                "dispersive-check: exponent {:.4} (expected {:.4}) -> {}",
                report.fit.fitted_exponent,
                report.expected_exponent,
                if report.pass { "PASS" } else { "FAIL" }
            );
            Ok(report.pass)
        }
        Command::SymmetryCheck => {
            let report = symmetry_check(cfg)?;
            let mut table = CsvTable::new("symmetry-check", seed, 1, grid_info);
            table.comment("verdict", if report.pass { "PASS" } else { "FAIL" });
            table.columns(&["metric", "value"]);
            table.row(vec!["unitarity_defect".into(), fmt(report.unitarity_defect)]);
            table.row(vec![
                "transport_invariance_defect".into(),
                fmt(report.transport_invariance_defect),
            ]);
            table.row(vec![
                "decoupling_defect_far".into(),
                fmt(report.decoupling_defect_far),
            ]);
            table.row(vec![
                "decoupling_monotone".into(),
                fmt_bool(report.decoupling_monotone),
            ]);
            table.row(vec![
                "product_decay_monotone".into(),
                fmt_bool(report.product_decay_monotone),
            ]);
            table.row(vec![
                "product_far_over_near".into(),
                fmt(report.product_far_over_near),
            ]);
            table.write(&out_dir.join("symmetry.csv"))?;
            println!(
                "symmetry-check: unitarity {:.2e}, transport {:.2e} -> {}",
                report.unitarity_defect,
                report.transport_invariance_defect,
                if report.pass { "PASS" } else { "FAIL" }
            );
            Ok(report.pass)
        }
        Command::NoiseCheck => {
            let report = noise_check(cfg)?;
            let mut table = CsvTable::new("noise-check", seed, 1, grid_info);
            table.comment("verdict", if report.pass { "PASS" } else { "FAIL" });
            table.columns(&["metric", "value"]);
            table.row(vec![
                "orthonormality_defect".into(),
                fmt(report.orthonormality_defect),
            ]);
            table.row(vec![
                "rotation_invariance_defect".into(),
                fmt(report.rotation_invariance_defect),
            ]);
            table.row(vec![
                "correction_boundary_fraction".into(),
                fmt(report.correction_boundary_fraction),
            ]);
            table.row(vec!["variance_z_score".into(), fmt(report.variance_z_score)]);
            table.row(vec!["mean_z_score".into(), fmt(report.mean_z_score)]);
            table.row(vec!["scaling_ratio".into(), fmt(report.scaling_ratio)]);
            table.write(&out_dir.join("noise.csv"))?;
            println!(
                "noise-check: rotation defect {:.2e}, variance z {:.2} -> {}",
                report.rotation_invariance_defect,
                report.variance_z_score,
                if report.pass { "PASS" } else { "FAIL" }
            );
            Ok(report.pass)
        }
    }
}
