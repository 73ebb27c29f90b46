//! The limit experiments and diagnostic suites driven by the CLI and the
//! acceptance tests: uniform boundedness over the approximation family, the
//! double limit with common random numbers, the stopping-time comparison,
//! the stability sweep, and the dispersive / symmetry / noise check bundles.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::SpectralGrid;
use crate::integrator::{
    diff_norms, solve_observed, solve_path, stability_experiment, Scheme, SolverConfig,
};
use crate::noise::{build_noise_model, NoiseModel};
use crate::nonlinearity::{CutoffSpec, NonlinearityExponent};
use crate::propagator::{check_dispersive_decay, strichartz_ratio, DispersiveFitReport};
use crate::rng::{substream, tag};
use crate::symmetry::{
    group_apply, mass_decoupling_defect, pairwise_strichartz_product, transported_solution,
    ProfileSet, SymmetryParams,
};
use crate::trajectory::DifferenceNorms;

use super::bank::initial_datum;
use super::config::{DataFamily, RunConfig};
use super::estimate::{estimate_from_samples, EnsembleNormEstimate};

use rand::Rng;
use rand_distr::StandardNormal;

fn solver_config(
    ep: f64,
    mu: f64,
    scale: f64,
    offset: f64,
    dt: f64,
    horizon: f64,
    scheme: Scheme,
    noise: Option<Arc<NoiseModel>>,
    seed: u64,
) -> Result<SolverConfig> {
    Ok(SolverConfig {
        exponent: NonlinearityExponent::new(ep, mu)?,
        cutoff: CutoffSpec::new(scale, offset)?,
        dt,
        horizon,
        noise,
        scheme,
        record_stride: usize::MAX,
        seed,
    })
}

// ---------------------------------------------------------------------------
// Uniform bound experiment
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct UniformBoundRow {
    pub family: DataFamily,
    pub l2_norm: f64,
    pub coupling: f64,
    pub epsilon: f64,
    pub scale: f64,
    pub x: EnsembleNormEstimate,
    pub x2: EnsembleNormEstimate,
}

#[derive(Clone, Debug)]
pub struct UniformBoundReport {
    pub rows: Vec<UniformBoundRow>,
    pub all_finite: bool,
    /// Per-epsilon marginal of the x2 estimate (max over scales, couplings
    /// and bank members), and the fitted slope of its log against epsilon.
    pub eps_marginal: Vec<(f64, f64)>,
    pub log_slope: f64,
    pub log_slope_se: f64,
    /// Max/min ratio of per-cell x-norm values (cell = (epsilon, scale,
    /// coupling), aggregated as max over the bank). Only meaningful for the
    /// deterministic slice.
    pub cell_ratio: f64,
    /// Fractions of adjacent truncation-scale pairs along which the x2 norm
    /// does not increase / not decrease (pathwise, all cells).
    pub frac_nonincreasing_in_scale: f64,
    pub frac_nondecreasing_in_scale: f64,
    pub stochastic: bool,
    pub pass: bool,
}

pub struct UniformBoundParams {
    pub grid: Arc<SpectralGrid>,
    pub epsilons: Vec<f64>,
    pub scales: Vec<f64>,
    pub couplings: Vec<f64>,
    pub offset: f64,
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    pub bank: Vec<(DataFamily, f64)>,
    pub noise: Option<Arc<NoiseModel>>,
    pub paths: usize,
    pub rho: f64,
    pub seed: u64,
}

impl UniformBoundParams {
    pub fn from_run_config(cfg: &RunConfig, stochastic: bool) -> Result<Self> {
        let grid = cfg.grid.build()?;
        let noise = if stochastic {
            Some(cfg.noise.build(grid.clone())?)
        } else {
            None
        };
        let mut bank = Vec::new();
        for &family in &cfg.bank.families {
            for &m in &cfg.bank.l2_norms {
                bank.push((family, m));
            }
        }
        Ok(Self {
            grid,
            epsilons: cfg.solver.epsilons.clone(),
            scales: cfg.solver.truncation_scales.clone(),
            couplings: cfg.solver.couplings.clone(),
            offset: cfg.solver.offset,
            dt: cfg.solver.dt,
            horizon: cfg.solver.horizon,
            scheme: cfg.solver.scheme,
            bank,
            noise,
            paths: if stochastic { cfg.monte_carlo.paths } else { 1 },
            rho: cfg.monte_carlo.rho,
            seed: cfg.monte_carlo.seed,
        })
    }
}

pub fn uniform_bound_experiment(params: &UniformBoundParams) -> Result<UniformBoundReport> {
    let stochastic = params
        .noise
        .as_ref()
        .map(|m| m.rank() > 0)
        .unwrap_or(false);
    let paths = if stochastic { params.paths } else { 1 };

    // Cell = (family, M, coupling, epsilon, scale); all parameter tuples are
    // carried explicitly in the output.
    let mut cells = Vec::new();
    for &(family, m) in &params.bank {
        for &mu in &params.couplings {
            for &ep in &params.epsilons {
                for &scale in &params.scales {
                    cells.push((family, m, mu, ep, scale));
                }
            }
        }
    }

    // Per-cell, per-path (x, x2) samples, computed in parallel and reduced
    // in (cell, path) order.
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..paths as u64).map(move |p| (c, p)))
        .collect();
    let samples: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(c, p)| -> Result<(f64, f64)> {
            let (family, m, mu, ep, scale) = cells[c];
            let u0 = initial_datum(params.grid.clone(), family, m)?;
            let cfg = solver_config(
                ep,
                mu,
                scale,
                params.offset,
                params.dt,
                params.horizon,
                params.scheme,
                params.noise.clone(),
                params.seed,
            )?;
            let traj = solve_path(&u0, &cfg, p)?;
            traj.check_line_faithful()?;
            Ok((
                traj.x_norm(0.0, params.horizon)?,
                traj.x2_norm(0.0, params.horizon)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let cell_samples = |c: usize| -> (Vec<f64>, Vec<f64>) {
        let base = c * paths;
        let xs = samples[base..base + paths].iter().map(|s| s.0).collect();
        let x2s = samples[base..base + paths].iter().map(|s| s.1).collect();
        (xs, x2s)
    };

    let mut rows = Vec::with_capacity(cells.len());
    for (c, &(family, m, mu, ep, scale)) in cells.iter().enumerate() {
        let (xs, x2s) = cell_samples(c);
        rows.push(UniformBoundRow {
            family,
            l2_norm: m,
            coupling: mu,
            epsilon: ep,
            scale,
            x: estimate_from_samples(&xs, params.rho, params.seed, 2 * c as u64),
            x2: estimate_from_samples(&x2s, params.rho, params.seed, 2 * c as u64 + 1),
        });
    }
    let all_finite = rows
        .iter()
        .all(|r| r.x.value.is_finite() && r.x2.value.is_finite());

    // Epsilon marginal of the x2 estimate and its log-slope, with a path
    // bootstrap for the slope's standard error (resampled path indices are
    // shared across cells, respecting the common-random-numbers coupling).
    let marginal_from = |pick: &dyn Fn(usize) -> f64| -> Vec<(f64, f64)> {
        params
            .epsilons
            .iter()
            .map(|&ep| {
                let v = cells
                    .iter()
                    .enumerate()
                    .filter(|(_, cell)| cell.3 == ep)
                    .map(|(c, _)| pick(c))
                    .fold(f64::NEG_INFINITY, f64::max);
                (ep, v)
            })
            .collect()
    };
    let full_x2 = |c: usize| rows[c].x2.value;
    let eps_marginal = marginal_from(&full_x2);
    let log_slope = slope_of_log(&eps_marginal);

    let log_slope_se = if stochastic && paths >= 2 {
        let mut rng = substream(params.seed, tag::BOOTSTRAP, u64::MAX, 0);
        let resamples = 200;
        let mut slopes = Vec::with_capacity(resamples);
        for _ in 0..resamples {
            let idx: Vec<usize> = (0..paths).map(|_| rng.gen_range(0..paths)).collect();
            let pick = |c: usize| -> f64 {
                let base = c * paths;
                let vals: Vec<f64> = idx.iter().map(|&i| samples[base + i].1).collect();
                super::estimate::power_mean(&vals, params.rho)
            };
            let marg = marginal_from(&pick);
            slopes.push(slope_of_log(&marg));
        }
        let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
        (slopes.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (slopes.len() - 1) as f64)
            .sqrt()
    } else {
        0.0
    };

    // Cell ratio over (epsilon, scale, coupling), aggregating the bank by max.
    let mut agg: std::collections::BTreeMap<(u64, u64, u64), f64> = std::collections::BTreeMap::new();
    for r in &rows {
        let key = (r.epsilon.to_bits(), r.scale.to_bits(), r.coupling.to_bits());
        let e = agg.entry(key).or_insert(f64::NEG_INFINITY);
        *e = e.max(r.x.value);
    }
    let max_cell = agg.values().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_cell = agg.values().cloned().fold(f64::INFINITY, f64::min);
    let cell_ratio = if min_cell > 0.0 { max_cell / min_cell } else { f64::INFINITY };

    // Pathwise trend of x2 along the truncation scale.
    let mut n_pairs = 0usize;
    let mut noninc = 0usize;
    let mut nondec = 0usize;
    let scale_count = params.scales.len();
    let outer = cells.len() / scale_count;
    for block in 0..outer {
        for s in 0..scale_count - 1 {
            let c_lo = block * scale_count + s;
            let c_hi = c_lo + 1;
            for p in 0..paths {
                let lo = samples[c_lo * paths + p].1;
                let hi = samples[c_hi * paths + p].1;
                n_pairs += 1;
                if hi <= lo + 1e-12 {
                    noninc += 1;
                }
                if hi >= lo - 1e-12 {
                    nondec += 1;
                }
            }
        }
    }
    let frac_nonincreasing_in_scale = noninc as f64 / n_pairs.max(1) as f64;
    let frac_nondecreasing_in_scale = nondec as f64 / n_pairs.max(1) as f64;

    // Verdict: everything finite, and no significant growth of the norm as
    // epsilon decreases (the slope of log x2 against epsilon must not be
    // significantly negative). The deterministic slice additionally demands
    // a tight max/min spread across cells.
    let growth_ok = log_slope >= -2.0 * log_slope_se - 1e-12;
    let pass = all_finite && growth_ok && (stochastic || cell_ratio < 1.5);

    Ok(UniformBoundReport {
        rows,
        all_finite,
        eps_marginal,
        log_slope,
        log_slope_se,
        cell_ratio,
        frac_nonincreasing_in_scale,
        frac_nondecreasing_in_scale,
        stochastic,
        pass,
    })
}

fn slope_of_log(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    sxy / sxx
}

// ---------------------------------------------------------------------------
// Double limit experiment
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct DoubleLimitRow {
    pub epsilon: f64,
    pub scale: f64,
    /// Distance to the ladder-corner reference run.
    pub d_ref: EnsembleNormEstimate,
    /// Cross-check distance to the untruncated critical run.
    pub d_critical: EnsembleNormEstimate,
}

#[derive(Clone, Debug)]
pub struct DoubleLimitReport {
    pub rows: Vec<DoubleLimitRow>,
    /// `D(m, eps_min)` along increasing scales.
    pub diagonal_scale: Vec<(f64, f64)>,
    /// `D(m_max, eps)` along decreasing epsilons.
    pub diagonal_epsilon: Vec<(f64, f64)>,
    pub corner_d_ref: f64,
    /// Gap between the two orderings' penultimate iterates, and the triangle
    /// bound it is checked against.
    pub corner_gap: f64,
    pub corner_gap_se: f64,
    pub corner_bound: f64,
    pub monotone_in_scale: bool,
    pub monotone_in_epsilon: bool,
    pub pass: bool,
}

pub struct DoubleLimitParams {
    pub grid: Arc<SpectralGrid>,
    /// Epsilon ladder, strictly decreasing toward the corner.
    pub epsilons: Vec<f64>,
    /// Scale ladder, strictly increasing toward the corner.
    pub scales: Vec<f64>,
    pub coupling: f64,
    pub offset: f64,
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    pub family: DataFamily,
    pub l2_norm: f64,
    pub noise: Option<Arc<NoiseModel>>,
    pub paths: usize,
    pub rho: f64,
    pub seed: u64,
}

impl DoubleLimitParams {
    pub fn from_run_config(cfg: &RunConfig) -> Result<Self> {
        let grid = cfg.grid.build()?;
        let noise = Some(cfg.noise.build(grid.clone())?);
        let mut epsilons: Vec<f64> = cfg
            .solver
            .epsilons
            .iter()
            .cloned()
            .filter(|&e| e > 0.0)
            .collect();
        epsilons.sort_by(|a, b| b.partial_cmp(a).unwrap());
        epsilons.dedup();
        let mut scales = cfg.solver.truncation_scales.clone();
        scales.sort_by(|a, b| a.partial_cmp(b).unwrap());
        scales.dedup();
        Ok(Self {
            grid,
            epsilons,
            scales,
            coupling: cfg.solver.couplings.last().cloned().unwrap_or(1.0),
            offset: cfg.solver.offset,
            dt: cfg.solver.dt,
            horizon: cfg.solver.horizon,
            scheme: cfg.solver.scheme,
            family: DataFamily::Gaussian,
            l2_norm: cfg.bank.l2_norms.iter().cloned().fold(1.0, f64::max),
            noise,
            paths: cfg.monte_carlo.paths,
            rho: cfg.monte_carlo.rho,
            seed: cfg.monte_carlo.seed,
        })
    }
}

pub fn double_limit_experiment(params: &DoubleLimitParams) -> Result<DoubleLimitReport> {
    if params.epsilons.len() < 2 || params.scales.len() < 2 {
        return Err(Error::InvalidParameter(
            "double limit needs at least two epsilons and two scales".into(),
        ));
    }
    let eps_min = *params.epsilons.last().unwrap();
    let eps_penult = params.epsilons[params.epsilons.len() - 2];
    let m_max = *params.scales.last().unwrap();
    let m_penult = params.scales[params.scales.len() - 2];
    let stochastic = params
        .noise
        .as_ref()
        .map(|m| m.rank() > 0)
        .unwrap_or(false);
    let paths = if stochastic { params.paths } else { 1 };
    let horizon = params.horizon;
    let n_steps = (horizon / params.dt).round() as usize;

    let u0 = initial_datum(params.grid.clone(), params.family, params.l2_norm)?;
    let make_cfg = |ep: f64, scale: f64| -> Result<SolverConfig> {
        solver_config(
            ep,
            params.coupling,
            scale,
            params.offset,
            params.dt,
            horizon,
            params.scheme,
            params.noise.clone(),
            params.seed,
        )
    };

    let mut cells = Vec::new();
    for &ep in &params.epsilons {
        for &m in &params.scales {
            cells.push((ep, m));
        }
    }

    // Per path: store the reference, critical and order-A-penultimate runs,
    // then stream every cell against them.
    struct PathResult {
        d_ref: Vec<f64>,
        d_crit: Vec<f64>,
        gap: f64,
    }
    let per_path: Vec<PathResult> = (0..paths as u64)
        .into_par_iter()
        .map(|p| -> Result<PathResult> {
            let store_run = |cfg: &SolverConfig| -> Result<Vec<Vec<Complex64>>> {
                let mut nodes = Vec::with_capacity(n_steps + 1);
                solve_observed(&u0, cfg, p, &mut |_, _, values| {
                    nodes.push(values.to_vec());
                })?
                .check_line_faithful()?;
                Ok(nodes)
            };
            let ref_nodes = store_run(&make_cfg(eps_min, m_max)?)?;
            let crit_nodes = store_run(&make_cfg(0.0, f64::INFINITY)?)?;
            let penult_nodes = store_run(&make_cfg(eps_min, m_penult)?)?;

            let dx = params.grid.dx();
            let dt = params.dt;
            let mut d_ref = Vec::with_capacity(cells.len());
            let mut d_crit = Vec::with_capacity(cells.len());
            for &(ep, m) in &cells {
                let mut against_ref = DifferenceNorms::default();
                let mut against_crit = DifferenceNorms::default();
                solve_observed(&u0, &make_cfg(ep, m)?, p, &mut |node, _, values| {
                    let (l2r, l10r) = diff_norms(values, &ref_nodes[node], dx);
                    let (l2c, l10c) = diff_norms(values, &crit_nodes[node], dx);
                    if node < n_steps {
                        against_ref.record(dt, l2r, l10r);
                        against_crit.record(dt, l2c, l10c);
                    } else {
                        against_ref.record_endpoint(l2r);
                        against_crit.record_endpoint(l2c);
                    }
                })?
                .check_line_faithful()?;
                d_ref.push(against_ref.x());
                d_crit.push(against_crit.x());
            }

            // Gap between the two orderings' penultimate iterates:
            // (m_penult, eps_min) against (m_max, eps_penult).
            let mut gap_norms = DifferenceNorms::default();
            solve_observed(&u0, &make_cfg(eps_penult, m_max)?, p, &mut |node, _, values| {
                let (l2, l10) = diff_norms(values, &penult_nodes[node], dx);
                if node < n_steps {
                    gap_norms.record(dt, l2, l10);
                } else {
                    gap_norms.record_endpoint(l2);
                }
            })?;

            Ok(PathResult {
                d_ref,
                d_crit,
                gap: gap_norms.x(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(cells.len());
    for (c, &(ep, m)) in cells.iter().enumerate() {
        let ref_samples: Vec<f64> = per_path.iter().map(|r| r.d_ref[c]).collect();
        let crit_samples: Vec<f64> = per_path.iter().map(|r| r.d_crit[c]).collect();
        rows.push(DoubleLimitRow {
            epsilon: ep,
            scale: m,
            d_ref: estimate_from_samples(&ref_samples, params.rho, params.seed, 2 * c as u64),
            d_critical: estimate_from_samples(
                &crit_samples,
                params.rho,
                params.seed,
                2 * c as u64 + 1,
            ),
        });
    }

    let find = |ep: f64, m: f64| -> &DoubleLimitRow {
        rows.iter()
            .find(|r| r.epsilon == ep && r.scale == m)
            .expect("cell present")
    };
    let diagonal_scale: Vec<(f64, f64)> = params
        .scales
        .iter()
        .map(|&m| (m, find(eps_min, m).d_ref.value))
        .collect();
    let diagonal_epsilon: Vec<(f64, f64)> = params
        .epsilons
        .iter()
        .map(|&ep| (ep, find(ep, m_max).d_ref.value))
        .collect();

    let monotone_within = |diag: &[(f64, f64)], ses: &[f64]| -> bool {
        diag.windows(2).enumerate().all(|(i, w)| {
            let slack = 2.0 * (ses[i] + ses[i + 1]) + 1e-12;
            w[1].1 <= w[0].1 + slack
        })
    };
    let ses_scale: Vec<f64> = params
        .scales
        .iter()
        .map(|&m| find(eps_min, m).d_ref.std_error)
        .collect();
    let ses_eps: Vec<f64> = params
        .epsilons
        .iter()
        .map(|&ep| find(ep, m_max).d_ref.std_error)
        .collect();
    let monotone_in_scale = monotone_within(&diagonal_scale, &ses_scale);
    let monotone_in_epsilon = monotone_within(&diagonal_epsilon, &ses_eps);

    let corner_d_ref = find(eps_min, m_max).d_ref.value;

    let gap_samples: Vec<f64> = per_path.iter().map(|r| r.gap).collect();
    let gap_est = estimate_from_samples(&gap_samples, params.rho, params.seed, u64::MAX - 1);
    let d_a = find(eps_min, m_penult).d_ref;
    let d_b = find(eps_penult, m_max).d_ref;
    // Pathwise triangle inequality pushed through the power mean: the gap
    // between the two orderings' penultimate iterates cannot exceed the sum
    // of their distances to the corner. Checked with 2 SE of slack; a
    // violation indicates broken common-random-numbers discipline or a norm
    // bug, not statistical noise.
    let corner_bound = d_a.value
        + d_b.value
        + 2.0 * (gap_est.std_error.powi(2) + d_a.std_error.powi(2) + d_b.std_error.powi(2)).sqrt();
    let corner_ok = gap_est.value <= corner_bound + 1e-12;

    let pass = monotone_in_scale && monotone_in_epsilon && corner_ok && corner_d_ref == 0.0;

    Ok(DoubleLimitReport {
        rows,
        diagonal_scale,
        diagonal_epsilon,
        corner_d_ref,
        corner_gap: gap_est.value,
        corner_gap_se: gap_est.std_error,
        corner_bound,
        monotone_in_scale,
        monotone_in_epsilon,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Stopping time experiment
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct StoppingTimeRow {
    pub path: u64,
    pub scale_low: f64,
    pub scale_high: f64,
    pub tau_low: f64,
    pub tau_high: f64,
    pub ordering_violated: bool,
    pub pre_tau_gap: f64,
}

#[derive(Clone, Debug)]
pub struct StoppingTimeReport {
    pub rows: Vec<StoppingTimeRow>,
    pub violations: usize,
    pub max_pre_tau_gap: f64,
    pub pass: bool,
}

pub struct StoppingTimeParams {
    pub grid: Arc<SpectralGrid>,
    pub scales: Vec<f64>,
    pub epsilon: f64,
    pub coupling: f64,
    pub dt: f64,
    pub horizon: f64,
    pub family: DataFamily,
    pub l2_norm: f64,
    pub noise: Arc<NoiseModel>,
    pub paths: usize,
    pub seed: u64,
}

impl StoppingTimeParams {
    pub fn from_run_config(cfg: &RunConfig) -> Result<Self> {
        let grid = cfg.grid.build()?;
        let noise = cfg.noise.build(grid.clone())?;
        let mut scales = cfg.stopping_time.scales.clone();
        scales.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self {
            grid,
            scales,
            epsilon: cfg.stopping_time.epsilon,
            coupling: cfg.solver.couplings.last().cloned().unwrap_or(1.0),
            dt: cfg.solver.dt,
            horizon: cfg.solver.horizon,
            family: DataFamily::Gaussian,
            l2_norm: cfg.bank.l2_norms.iter().cloned().fold(1.0, f64::max),
            noise,
            paths: cfg.stopping_time.paths,
            seed: cfg.monte_carlo.seed,
        })
    }
}

/// Per common-noise path and per adjacent pair of truncation levels, check
/// that the lower level stops no later than the higher one and that the two
/// trajectories coincide through the earlier stopping time.
pub fn stopping_time_experiment(params: &StoppingTimeParams) -> Result<StoppingTimeReport> {
    if params.scales.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two truncation levels".into(),
        ));
    }
    let u0 = initial_datum(params.grid.clone(), params.family, params.l2_norm)?;
    let horizon = params.horizon;
    let n_steps = (horizon / params.dt).round() as usize;
    let dx = params.grid.dx();

    let rows: Vec<Vec<StoppingTimeRow>> = (0..params.paths as u64)
        .into_par_iter()
        .map(|p| -> Result<Vec<StoppingTimeRow>> {
            // One run per level, nodes kept for pairwise comparison.
            let mut nodes: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(params.scales.len());
            let mut taus = Vec::with_capacity(params.scales.len());
            for &m in &params.scales {
                let cfg = solver_config(
                    params.epsilon,
                    params.coupling,
                    m,
                    0.0,
                    params.dt,
                    horizon,
                    Scheme::Strang,
                    Some(params.noise.clone()),
                    params.seed,
                )?;
                let mut run_nodes = Vec::with_capacity(n_steps + 1);
                let traj = solve_observed(&u0, &cfg, p, &mut |_, _, values| {
                    run_nodes.push(values.to_vec());
                })?;
                traj.check_line_faithful()?;
                nodes.push(run_nodes);
                taus.push(traj.stopping_time_or_horizon());
            }
            let mut out = Vec::with_capacity(params.scales.len() - 1);
            for i in 0..params.scales.len() - 1 {
                let tau_low = taus[i];
                let tau_high = taus[i + 1];
                let last_node = (tau_low / params.dt).round() as usize;
                let mut gap = 0.0_f64;
                for node in 0..=last_node.min(n_steps) {
                    let (l2, _) = diff_norms(&nodes[i][node], &nodes[i + 1][node], dx);
                    gap = gap.max(l2);
                }
                out.push(StoppingTimeRow {
                    path: p,
                    scale_low: params.scales[i],
                    scale_high: params.scales[i + 1],
                    tau_low,
                    tau_high,
                    ordering_violated: tau_low > tau_high,
                    pre_tau_gap: gap,
                });
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let rows: Vec<StoppingTimeRow> = rows.into_iter().flatten().collect();
    let violations = rows.iter().filter(|r| r.ordering_violated).count();
    let max_pre_tau_gap = rows.iter().map(|r| r.pre_tau_gap).fold(0.0, f64::max);
    let pass = violations == 0 && max_pre_tau_gap < 1e-10;
    Ok(StoppingTimeReport {
        rows,
        violations,
        max_pre_tau_gap,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Stability sweep
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct StabilitySweepRow {
    pub delta: f64,
    pub initial_gap: f64,
    pub response: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct StabilitySweepReport {
    pub rows: Vec<StabilitySweepRow>,
    pub ratio_spread: f64,
    pub pass: bool,
}

pub struct StabilitySweepParams {
    pub grid: Arc<SpectralGrid>,
    pub deltas: Vec<f64>,
    pub epsilon: f64,
    pub coupling: f64,
    pub dt: f64,
    pub horizon: f64,
    pub family: DataFamily,
    pub l2_norm: f64,
}

impl StabilitySweepParams {
    pub fn from_run_config(cfg: &RunConfig) -> Result<Self> {
        Ok(Self {
            grid: cfg.grid.build()?,
            deltas: cfg.stability.deltas.clone(),
            epsilon: cfg.stability.epsilon,
            coupling: cfg.stability.coupling,
            dt: cfg.solver.dt,
            horizon: cfg.solver.horizon,
            family: DataFamily::Gaussian,
            l2_norm: 1.0,
        })
    }
}

/// Perturb the initial datum across several decades and watch the response
/// ratio stabilize: linear response means the ratio is delta-independent.
pub fn stability_sweep(params: &StabilitySweepParams) -> Result<StabilitySweepReport> {
    let w0 = initial_datum(params.grid.clone(), params.family, params.l2_norm)?;
    // Perturbation direction: a normalized modulated bump.
    let dir_raw = Field::from_fn(params.grid.clone(), |x| {
        Complex64::from_polar((-x * x).exp(), x)
    });
    let dir = dir_raw.scale(Complex64::new(
        1.0 / dir_raw.lebesgue_norm(2.0)?,
        0.0,
    ));
    let cfg = solver_config(
        params.epsilon,
        params.coupling,
        f64::INFINITY,
        0.0,
        params.dt,
        params.horizon,
        Scheme::Strang,
        None,
        0,
    )?;
    let mut rows = Vec::with_capacity(params.deltas.len());
    for &delta in &params.deltas {
        let v0 = w0.add(&dir.scale(Complex64::new(delta, 0.0)))?;
        let report = stability_experiment(&w0, &v0, None, &cfg, &cfg)?;
        rows.push(StabilitySweepRow {
            delta,
            initial_gap: report.initial_gap,
            response: report.response,
            ratio: report.ratio,
        });
    }
    let max = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let ratio_spread = if min > 0.0 { max / min } else { f64::INFINITY };
    let pass = ratio_spread < 2.0;
    Ok(StabilitySweepReport {
        rows,
        ratio_spread,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Dispersive / Strichartz check
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct DispersiveCheckReport {
    pub fit: DispersiveFitReport,
    pub expected_exponent: f64,
    pub sup_pair_max_defect: f64,
    pub strichartz_max_ratio: f64,
    pub scaling_invariance_defect: f64,
    pub pass: bool,
}

/// Fit the sup-norm decay of dispersed Gaussian data and sample Strichartz
/// ratios over random low-frequency data.
pub fn dispersive_check(cfg: &RunConfig) -> Result<DispersiveCheckReport> {
    let sec = &cfg.dispersive;
    let grid = SpectralGrid::new(sec.half_length, sec.points)?;
    let f = Field::gaussian(grid.clone());
    let fit = check_dispersive_decay(&f, sec.p, sec.t_min, sec.t_max, sec.samples)?;
    let expected = 1.0 / sec.p - 0.5;

    // (inf, 2) ratios must be exactly one; check over a few data.
    let sup_pair = crate::norms::AdmissiblePair::new(f64::INFINITY, 2.0)?;
    let mut sup_defect = 0.0_f64;
    for seed in 0..4u64 {
        let data = random_low_frequency_field(&grid, cfg.monte_carlo.seed, seed);
        let r = strichartz_ratio(&data, sup_pair, 1.0)?;
        sup_defect = sup_defect.max((r - 1.0).abs());
    }

    // (5, 10) ratios over random unit-mass data: finite spread, invariant
    // under rescaling.
    let pair = crate::norms::AdmissiblePair::new(5.0, 10.0)?;
    let mut max_ratio = 0.0_f64;
    let mut scale_defect = 0.0_f64;
    for seed in 0..100u64 {
        let data = random_low_frequency_field(&grid, cfg.monte_carlo.seed, seed);
        let r = strichartz_ratio(&data, pair, 1.0)?;
        max_ratio = max_ratio.max(r);
        if seed % 25 == 0 {
            let r2 = strichartz_ratio(&data.scale(Complex64::new(3.7, 0.0)), pair, 1.0)?;
            scale_defect = scale_defect.max((r - r2).abs());
        }
    }

    let pass = (fit.fitted_exponent - expected).abs() <= 0.05
        && sup_defect <= 1e-12
        && max_ratio.is_finite()
        && scale_defect <= 1e-12;
    Ok(DispersiveCheckReport {
        fit,
        expected_exponent: expected,
        sup_pair_max_defect: sup_defect,
        strichartz_max_ratio: max_ratio,
        scaling_invariance_defect: scale_defect,
        pass,
    })
}

/// Random smooth decaying datum, unit `L^2` norm: Gaussian coefficients on
/// low wavenumbers under a spectral envelope.
pub fn random_low_frequency_field(grid: &Arc<SpectralGrid>, seed: u64, index: u64) -> Field {
    let mut rng = substream(seed, tag::AUX, index, 0);
    let n = grid.points();
    let k_cut = grid.max_wavenumber() / 6.0;
    let mut spec = vec![Complex64::default(); n];
    for (s, &k) in spec.iter_mut().zip(grid.wavenumbers()) {
        let envelope = (-(k / k_cut) * (k / k_cut)).exp();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *s = Complex64::new(re, im) * envelope;
    }
    // Localize: multiply by a broad Gaussian window in physical space so the
    // boundary monitor is happy.
    grid.inverse(&mut spec);
    let l = grid.half_length();
    for (v, &x) in spec.iter_mut().zip(grid.xs()) {
        let w = (-(x / (0.2 * l)) * (x / (0.2 * l))).exp();
        *v *= w;
    }
    let f = Field::new(grid.clone(), spec, 0.0).expect("same grid");
    let norm = f.lebesgue_norm(2.0).unwrap();
    f.scale(Complex64::new(1.0 / norm, 0.0))
}

// ---------------------------------------------------------------------------
// Symmetry check
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct SymmetryCheckReport {
    pub unitarity_defect: f64,
    pub transport_invariance_defect: f64,
    pub decoupling_defect_far: f64,
    pub decoupling_monotone: bool,
    pub product_decay_monotone: bool,
    pub product_far_over_near: f64,
    pub pass: bool,
}

pub fn symmetry_check(cfg: &RunConfig) -> Result<SymmetryCheckReport> {
    let grid = SpectralGrid::new(40.0 * std::f64::consts::PI, 2048)?;
    let f = Field::gaussian(grid.clone());
    let m0 = f.mass();

    // Unitarity over a few guarded parameter sets.
    let mut unitarity_defect = 0.0_f64;
    for p in [
        SymmetryParams::new(3.0, 1.5, 2.0, 0.4)?,
        SymmetryParams::new(-5.0, -2.0, 0.5, -0.2)?,
        SymmetryParams::new(0.0, 3.0, 1.0, 1.0)?,
    ] {
        let g = group_apply(&f, &p)?;
        unitarity_defect = unitarity_defect.max((g.mass() - m0).abs() / m0);
    }

    // Strichartz invariance of a transported free solution.
    let transport_invariance_defect = {
        let cfg_run = solver_config(
            0.0,
            1.0,
            f64::INFINITY,
            0.0,
            1e-2,
            0.5,
            Scheme::Strang,
            None,
            0,
        )?;
        let mut run_cfg = cfg_run;
        run_cfg.record_stride = 1;
        let traj = crate::integrator::solve(&f, &run_cfg)?;
        let mut worst = 0.0_f64;
        for p in [
            SymmetryParams::new(2.0, 1.0, 2.0, 0.3)?,
            SymmetryParams::new(-1.0, -2.0, 0.5, 0.0)?,
        ] {
            let moved = transported_solution(&traj, &p)?;
            let a = traj.x2_norm(traj.start_time(), traj.end_time())?;
            let b = moved.x2_norm(moved.start_time(), moved.end_time())?;
            worst = worst.max((a - b).abs() / a);
        }
        worst
    };

    // Mass decoupling along a translation separation sequence. Monotonicity
    // is checked where the overlap is far above roundoff; the far defect is
    // checked at separation 40.
    let make_pair = |seps: &[f64]| -> Result<ProfileSet> {
        let phi = Field::gaussian(grid.clone());
        let params = vec![
            seps.iter()
                .map(|&s| SymmetryParams::new(-s / 2.0, 0.0, 1.0, 0.0).unwrap())
                .collect::<Vec<_>>(),
            seps.iter()
                .map(|&s| SymmetryParams::new(s / 2.0, 0.0, 1.0, 0.0).unwrap())
                .collect::<Vec<_>>(),
        ];
        ProfileSet::new(vec![phi.clone(), phi], params, vec![None; seps.len()])
    };
    let near = make_pair(&[1.0, 2.0, 3.0, 4.0, 5.0])?;
    let defects: Vec<f64> = (0..5)
        .map(|n| mass_decoupling_defect(&near, n))
        .collect::<Result<Vec<_>>>()?;
    let decoupling_monotone = defects.windows(2).all(|w| w[1] <= w[0] + 1e-15);
    let far = make_pair(&[40.0])?;
    let decoupling_defect_far = mass_decoupling_defect(&far, 0)?;

    // Pairwise evolved-profile products along the separation sequence
    // 4, 8, ..., 40: monotone decay until the roundoff floor of the
    // resampling, then the floor.
    let seps: Vec<f64> = (1..=10).map(|n| 4.0 * n as f64).collect();
    let ps = make_pair(&seps)?;
    let products: Vec<f64> = (0..seps.len())
        .map(|n| pairwise_strichartz_product(&ps, 0, 1, n, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let floor = products[0] * 1e-10;
    let product_decay_monotone = products
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-9) || (w[0] < floor && w[1] < floor));
    let product_far_over_near = products.last().unwrap() / products.first().unwrap();

    let pass = unitarity_defect <= 1e-10
        && transport_invariance_defect <= 1e-6
        && decoupling_defect_far <= 1e-3
        && decoupling_monotone
        && product_decay_monotone
        && product_far_over_near < 0.1;
    let _ = cfg;
    Ok(SymmetryCheckReport {
        unitarity_defect,
        transport_invariance_defect,
        decoupling_defect_far,
        decoupling_monotone,
        product_decay_monotone,
        product_far_over_near,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Noise check
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct NoiseCheckReport {
    pub orthonormality_defect: f64,
    pub rotation_invariance_defect: f64,
    pub correction_boundary_fraction: f64,
    pub variance_z_score: f64,
    pub mean_z_score: f64,
    pub scaling_ratio: f64,
    pub pass: bool,
}

pub fn noise_check(cfg: &RunConfig) -> Result<NoiseCheckReport> {
    let grid = cfg.grid.build()?;
    let model = cfg.noise.build(grid.clone())?;
    let dx = grid.dx();

    let mut orthonormality_defect = 0.0_f64;
    for family in [model.basis(), model.modes()] {
        for i in 0..family.len() {
            for j in 0..=i {
                let dot: f64 =
                    family[i].iter().zip(&family[j]).map(|(a, b)| a * b).sum::<f64>() * dx;
                let want = if i == j { 1.0 } else { 0.0 };
                orthonormality_defect = orthonormality_defect.max((dot - want).abs());
            }
        }
    }

    // Rotation invariance of the correction field, rank-4 model, random
    // orthogonal rotations of the input basis.
    let rot_model = build_noise_model(4, cfg.noise.decay, cfg.noise.width, grid.clone())?;
    let mut rotation_invariance_defect = 0.0_f64;
    let mut rng = substream(cfg.monte_carlo.seed, tag::AUX, 0xfeed, 0);
    for _ in 0..5 {
        let q = random_orthogonal(4, &mut rng);
        // F' = sum_k (sum_l Q_kl c_l g_l)^2, brute force in the rotated basis.
        let mut f_rot = vec![0.0; grid.points()];
        for row in &q {
            for (j, f) in f_rot.iter_mut().enumerate() {
                let mut v = 0.0;
                for (l, &qkl) in row.iter().enumerate() {
                    v += qkl * rot_model.singular_values()[l] * rot_model.modes()[l][j];
                }
                *f += v * v;
            }
        }
        let defect = f_rot
            .iter()
            .zip(rot_model.correction())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        rotation_invariance_defect = rotation_invariance_defect.max(defect);
    }

    let f_max = model.correction().iter().cloned().fold(0.0_f64, f64::max);
    let n = grid.points();
    let correction_boundary_fraction = if f_max > 0.0 {
        model.correction()[0].max(model.correction()[n - 1]) / f_max
    } else {
        0.0
    };

    // Increment statistics at the correction peak.
    let j0 = model
        .correction()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(n / 2);
    let samples = 40_000u64;
    let dt = 1e-2;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for s in 0..samples {
        let inc = model.increment_for(cfg.monte_carlo.seed, 0, s, dt)?;
        let v = inc.values()[j0];
        sum += v;
        sum_sq += v * v;
    }
    let nf = samples as f64;
    let mean = sum / nf;
    let var = sum_sq / nf - mean * mean;
    let expect = dt * model.correction()[j0];
    let variance_z_score = (var - expect).abs() / (expect * (2.0 / nf).sqrt());
    let mean_z_score = mean.abs() / (expect / nf).sqrt();

    // dt versus 4 dt variance scaling.
    let var_of = |dt_s: f64, shift: u64| -> Result<f64> {
        let m = 20_000u64;
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for s in 0..m {
            let inc = model.increment_for(cfg.monte_carlo.seed ^ shift, 1, s, dt_s)?;
            let v = inc.values()[j0];
            s1 += v;
            s2 += v * v;
        }
        Ok(s2 / m as f64 - (s1 / m as f64).powi(2))
    };
    let scaling_ratio = var_of(4.0 * dt, 0x5ca1e)? / var_of(dt, 0)?;

    let pass = orthonormality_defect <= 1e-12
        && rotation_invariance_defect <= 1e-12
        && correction_boundary_fraction <= 1e-12
        && variance_z_score <= 3.0
        && mean_z_score <= 4.0
        && (scaling_ratio - 4.0).abs() <= 0.4;
    Ok(NoiseCheckReport {
        orthonormality_defect,
        rotation_invariance_defect,
        correction_boundary_fraction,
        variance_z_score,
        mean_z_score,
        scaling_ratio,
        pass,
    })
}

/// Random orthogonal matrix via Gram–Schmidt on Gaussian columns.
pub fn random_orthogonal(n: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    for i in 0..n {
        for j in 0..i {
            let proj: f64 = q[i].iter().zip(&q[j]).map(|(a, b)| a * b).sum();
            let prev = q[j].clone();
            for (v, p) in q[i].iter_mut().zip(&prev) {
                *v -= proj * p;
            }
        }
        let norm: f64 = q[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in q[i].iter_mut() {
            *v /= norm;
        }
    }
    q
}
