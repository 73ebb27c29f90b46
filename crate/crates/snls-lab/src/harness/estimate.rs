//! Finite-sample estimator for ensemble norms of path functionals: the
//! power mean `(mean_p ||u_p||^rho)^(1/rho)` over Monte Carlo paths with a
//! bootstrap standard error. The almost-sure and moment statements of the
//! theory have no finite-sample form, so every stochastic verdict built on
//! this estimator is statistical.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::integrator::{solve_path, SolverConfig};
use crate::rng::{substream, tag};

/// Number of bootstrap resamples used for standard errors.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// An ensemble norm estimate: the empirical power mean, its bootstrap
/// standard error, and the sample size behind them.
#[derive(Clone, Copy, Debug)]
pub struct EnsembleNormEstimate {
    pub value: f64,
    pub std_error: f64,
    pub paths: usize,
    pub rho: f64,
}

/// `(mean x_i^rho)^(1/rho)` of nonnegative samples.
pub fn power_mean(samples: &[f64], rho: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mean = samples.iter().map(|x| x.powf(rho)).sum::<f64>() / samples.len() as f64;
    mean.powf(1.0 / rho)
}

/// Bootstrap standard error of the power mean. Resampling is seeded from
/// `(seed, stream)` so results are reproducible and independent of thread
/// count; `stream` should identify the cell being estimated.
pub fn bootstrap_std_error(samples: &[f64], rho: f64, seed: u64, stream: u64) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let mut rng = substream(seed, tag::BOOTSTRAP, stream, 0);
    let n = samples.len();
    let mut values = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut resample = vec![0.0; n];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        for slot in resample.iter_mut() {
            *slot = samples[rng.gen_range(0..n)];
        }
        values.push(power_mean(&resample, rho));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (values.len() - 1) as f64;
    var.sqrt()
}

/// Estimate from precomputed per-path values.
pub fn estimate_from_samples(
    samples: &[f64],
    rho: f64,
    seed: u64,
    stream: u64,
) -> EnsembleNormEstimate {
    EnsembleNormEstimate {
        value: power_mean(samples, rho),
        std_error: bootstrap_std_error(samples, rho, seed, stream),
        paths: samples.len(),
        rho,
    }
}

/// Run `paths` common-seed-derived noise paths from `u0` and estimate the
/// ensemble norm of the full space-time norm over `[0, T]`.
///
/// Without noise every path coincides, so the estimate collapses to the
/// single deterministic norm with zero standard error.
pub fn estimate_ensemble_norm(
    u0: &Field,
    cfg: &SolverConfig,
    paths: usize,
    rho: f64,
) -> Result<EnsembleNormEstimate> {
    if paths < 1 {
        return Err(Error::InvalidParameter("need at least one path".into()));
    }
    if rho < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "power mean order must be >= 1, got {rho}"
        )));
    }
    let horizon = cfg.horizon;
    let noise_active = cfg.noise.as_ref().map(|m| m.rank() > 0).unwrap_or(false);
    if !noise_active {
        let traj = solve_path(u0, cfg, 0)?;
        traj.check_line_faithful()?;
        return Ok(EnsembleNormEstimate {
            value: traj.x_norm(0.0, horizon)?,
            std_error: 0.0,
            paths,
            rho,
        });
    }
    let samples: Vec<f64> = (0..paths as u64)
        .into_par_iter()
        .map(|p| -> Result<f64> {
            let traj = solve_path(u0, cfg, p)?;
            traj.check_line_faithful()?;
            traj.x_norm(0.0, horizon)
        })
        .collect::<Result<Vec<f64>>>()
        .map_err(|e| match e {
            Error::BlowUp { time, detail } => Error::BlowUp {
                time,
                detail: format!("path blow-up during ensemble estimation: {detail}"),
            },
            other => other,
        })?;
    Ok(estimate_from_samples(&samples, rho, cfg.seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_mean_is_monotone_in_rho() {
        let samples = [0.5, 1.2, 0.9, 2.0, 1.4];
        assert!(power_mean(&samples, 10.0) >= power_mean(&samples, 5.0));
    }

    #[test]
    fn constant_samples_have_zero_error() {
        let samples = [1.5; 16];
        assert_eq!(bootstrap_std_error(&samples, 5.0, 1, 0), 0.0);
        assert!((power_mean(&samples, 5.0) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_error_shrinks_with_sample_size() {
        // Deterministic synthetic spread; the error should fall roughly like
        // 1/sqrt(2) per doubling.
        let base: Vec<f64> = (0..256)
            .map(|i| 1.0 + 0.3 * ((i as f64 * 0.73).sin()))
            .collect();
        let se64 = bootstrap_std_error(&base[..64], 5.0, 7, 1);
        let se128 = bootstrap_std_error(&base[..128], 5.0, 7, 2);
        let se256 = bootstrap_std_error(&base, 5.0, 7, 3);
        let r1 = se64 / se128;
        let r2 = se128 / se256;
        let target = std::f64::consts::SQRT_2;
        assert!((r1 / target - 1.0).abs() < 0.3, "ratio {r1}");
        assert!((r2 / target - 1.0).abs() < 0.3, "ratio {r2}");
    }
}
