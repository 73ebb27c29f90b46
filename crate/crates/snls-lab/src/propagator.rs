//! The free Schrödinger group as an exact spectral multiplier, plus empirical
//! checks of its dispersive decay and space-time integrability.
//!
//! On the periodic grid the group is exact: evolving by `t` multiplies the
//! Fourier coefficient at wavenumber `k` by `exp(-i k^2 t)`. All time-stepping
//! error in the nonlinear solvers therefore comes from the splitting, never
//! from the linear flow.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::norms::AdmissiblePair;

/// Apply `exp(-i k^2 t)` to a spectrum in place (FFT bin order).
pub(crate) fn apply_free_multiplier(spec: &mut [Complex64], wavenumbers: &[f64], t: f64) {
    for (v, &k) in spec.iter_mut().zip(wavenumbers) {
        *v *= Complex64::from_polar(1.0, -k * k * t);
    }
}

/// Evolve a field by time `t` under the free Schrödinger flow.
/// Unitary on the grid; the output carries time `f.time() + t`.
pub fn free_evolve(f: &Field, t: f64) -> Field {
    let grid = f.grid().clone();
    let mut spec: Vec<Complex64> = f.values().to_vec();
    grid.forward(&mut spec);
    apply_free_multiplier(&mut spec, grid.wavenumbers(), t);
    grid.inverse(&mut spec);
    let mut out = Field::new(grid, spec, 0.0).expect("same grid");
    out.set_time(f.time() + t);
    out
}

/// Snapshot of the free flow at many times from one cached forward transform.
/// `times` are offsets from `f.time()`.
pub fn free_evolve_many(f: &Field, times: &[f64]) -> Vec<Field> {
    let grid = f.grid().clone();
    let mut base: Vec<Complex64> = f.values().to_vec();
    grid.forward(&mut base);
    times
        .iter()
        .map(|&t| {
            let mut spec = base.clone();
            apply_free_multiplier(&mut spec, grid.wavenumbers(), t);
            grid.inverse(&mut spec);
            let mut out = Field::new(grid.clone(), spec, 0.0).expect("same grid");
            out.set_time(f.time() + t);
            out
        })
        .collect()
}

/// Outcome of a dispersive-decay fit: sampled sup-type norms against time and
/// the fitted log-log exponent. For data in `L^p`, `p` in `[1,2]`, the decay
/// of the `L^{p'}` norm follows `t^(1/p - 1/2)` once the profile has spread.
#[derive(Clone, Debug)]
pub struct DispersiveFitReport {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub fitted_exponent: f64,
    pub fit_residual: f64,
}

/// Tolerance for the boundary-mass monitor used by the empirical checks.
pub const BOUNDARY_MASS_TOL: f64 = 1e-10;

/// Fit the decay exponent of `||exp(it Lap) f||_{L^{p'}}` over
/// log-spaced times in `[t_min, t_max]`.
///
/// The box must be large enough that the dispersed mass stays away from the
/// boundary over the whole window; the monitor rejects the run otherwise.
/// Times below ~1 sit in the pre-asymptotic regime and should be excluded by
/// the caller via `t_min`.
pub fn check_dispersive_decay(
    f: &Field,
    p: f64,
    t_min: f64,
    t_max: f64,
    samples: usize,
) -> Result<DispersiveFitReport> {
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "dispersive estimate needs p in [1,2], got {p}"
        )));
    }
    if !(t_min > 0.0 && t_max > t_min) || samples < 2 {
        return Err(Error::InvalidParameter(
            "need 0 < t_min < t_max and at least two samples".into(),
        ));
    }
    if f.boundary_mass_fraction(0.9) > BOUNDARY_MASS_TOL {
        return Err(Error::BoxTooSmall(
            "initial datum already touches the boundary".into(),
        ));
    }
    let p_conj = if p == 1.0 { f64::INFINITY } else { p / (p - 1.0) };
    let log_step = (t_max / t_min).ln() / (samples - 1) as f64;
    let times: Vec<f64> = (0..samples)
        .map(|i| t_min * (log_step * i as f64).exp())
        .collect();
    let snapshots = free_evolve_many(f, &times);
    let mut norms = Vec::with_capacity(samples);
    for (snap, &t) in snapshots.iter().zip(&times) {
        let frac = snap.boundary_mass_fraction(0.9);
        if frac > BOUNDARY_MASS_TOL {
            return Err(Error::BoxTooSmall(format!(
                "boundary mass fraction {frac:.3e} at t = {t}"
            )));
        }
        norms.push(snap.lebesgue_norm(p_conj)?);
    }
    if norms.iter().any(|&n| n <= 0.0) {
        return Err(Error::DegenerateFit(
            "vanishing norm makes the log-log fit degenerate".into(),
        ));
    }
    let (slope, residual) = log_log_fit(&times, &norms);
    Ok(DispersiveFitReport {
        times,
        norms,
        fitted_exponent: slope,
        fit_residual: residual,
    })
}

/// Ordinary least squares of `ln y` against `ln x`; returns (slope, rms residual).
fn log_log_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    (slope, (ss / n).sqrt())
}

/// `||exp(it Lap) f||_{L_t^q L_x^r (0, T)} / ||f||_{L^2}` for an admissible
/// pair, with the time direction resolved by a left-endpoint rule on 256
/// uniform sample times. A zero field has no ratio.
pub fn strichartz_ratio(f: &Field, pair: AdmissiblePair, horizon: f64) -> Result<f64> {
    strichartz_ratio_sampled(f, pair, horizon, 256)
}

/// As [`strichartz_ratio`] with explicit time resolution.
pub fn strichartz_ratio_sampled(
    f: &Field,
    pair: AdmissiblePair,
    horizon: f64,
    time_samples: usize,
) -> Result<f64> {
    if horizon <= 0.0 || time_samples == 0 {
        return Err(Error::InvalidParameter(
            "horizon and sample count must be positive".into(),
        ));
    }
    let denom = f.lebesgue_norm(2.0)?;
    if denom == 0.0 {
        return Err(Error::UndefinedRatio("zero initial datum".into()));
    }
    let dt = horizon / time_samples as f64;
    let times: Vec<f64> = (0..time_samples).map(|i| i as f64 * dt).collect();
    let snapshots = free_evolve_many(f, &times);
    let numer = if pair.q == f64::INFINITY {
        snapshots
            .iter()
            .map(|s| s.lebesgue_norm(pair.r).unwrap_or(f64::NAN))
            .fold(0.0_f64, f64::max)
    } else {
        let mut acc = 0.0;
        for snap in &snapshots {
            acc += snap.lebesgue_norm(pair.r)?.powf(pair.q) * dt;
        }
        acc.powf(1.0 / pair.q)
    };
    Ok(numer / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpectralGrid;
    use std::sync::Arc;

    fn gaussian_grid() -> Arc<SpectralGrid> {
        SpectralGrid::default_box()
    }

    /// Closed-form free evolution of exp(-x^2):
    /// u(t,x) = (1+4it)^(-1/2) exp(-x^2 / (1+4it)).
    fn gaussian_exact(grid: &Arc<SpectralGrid>, t: f64) -> Field {
        let denom = Complex64::new(1.0, 4.0 * t);
        let amp = denom.sqrt().inv();
        Field::from_fn(grid.clone(), |x| amp * (-(x * x) / denom).exp())
    }

    #[test]
    fn zero_time_is_identity() {
        let f = Field::gaussian(gaussian_grid());
        let g = free_evolve(&f, 0.0);
        let diff = g.sub(&f).unwrap().lebesgue_norm(2.0).unwrap();
        assert!(diff < 1e-14);
    }

    #[test]
    fn plane_wave_is_eigenfunction() {
        let grid = SpectralGrid::new(8.0, 128).unwrap();
        // k0 = pi * 6 / L is a grid wavenumber.
        let k0 = std::f64::consts::PI * 6.0 / 8.0;
        let f = Field::plane_wave(grid.clone(), k0);
        let t = 0.37;
        let got = free_evolve(&f, t);
        let phase = Complex64::from_polar(1.0, -k0 * k0 * t);
        for (g, f0) in got.values().iter().zip(f.values()) {
            assert!((g - phase * f0).norm() < 1e-12);
        }
    }

    #[test]
    fn gaussian_matches_closed_form() {
        let grid = gaussian_grid();
        let f = Field::gaussian(grid.clone());
        let got = free_evolve(&f, 0.5);
        let exact = gaussian_exact(&grid, 0.5);
        let err = got.sub(&exact).unwrap().lebesgue_norm(2.0).unwrap();
        assert!(err < 1e-8, "L2 error {err}");
    }

    #[test]
    fn unitarity_and_group_law() {
        let grid = SpectralGrid::new(20.0, 512).unwrap();
        let f = Field::from_fn(grid, |x| {
            Complex64::new((-0.3 * x * x).exp() * (2.0 * x).cos(), (1.3 * x).sin() * (-0.2 * x * x).exp())
        });
        let m0 = f.mass();
        for t in [0.1, 1.0, 7.3] {
            let g = free_evolve(&f, t);
            assert!((g.mass() - m0).abs() / m0 < 1e-12);
        }
        let two_step = free_evolve(&free_evolve(&f, 0.4), 0.6);
        let one_step = free_evolve(&f, 1.0);
        let gap = two_step.sub(&one_step).unwrap().lebesgue_norm(2.0).unwrap();
        assert!(gap / m0.sqrt() < 1e-12, "group law gap {gap}");
    }

    #[test]
    fn time_reversal_via_conjugation() {
        let grid = SpectralGrid::new(20.0, 512).unwrap();
        let f = Field::from_fn(grid, |x| Complex64::new((-x * x).exp(), 0.3 * (-x * x * 0.5).exp()));
        let lhs = free_evolve(&f.conj(), 0.7);
        let rhs = free_evolve(&f, -0.7).conj();
        let gap = lhs.sub(&rhs).unwrap().lebesgue_norm(2.0).unwrap();
        assert!(gap < 1e-12);
    }

    #[test]
    fn dispersive_decay_degenerate_input_is_flagged() {
        let f = Field::zero(gaussian_grid());
        match check_dispersive_decay(&f, 1.0, 1.0, 10.0, 8) {
            Err(Error::DegenerateFit(_)) => {}
            other => panic!("expected degenerate fit, got {other:?}"),
        }
    }

    #[test]
    fn dispersive_decay_box_guard_trips() {
        // Default box is far too small for t up to 50.
        let f = Field::gaussian(gaussian_grid());
        match check_dispersive_decay(&f, 1.0, 1.0, 50.0, 12) {
            Err(Error::BoxTooSmall(_)) => {}
            other => panic!("expected box-too-small, got {other:?}"),
        }
    }

    #[test]
    fn l2_dispersive_exponent_is_zero() {
        // Window chosen so the dispersed mass stays inside the default box.
        let f = Field::gaussian(gaussian_grid());
        let report = check_dispersive_decay(&f, 2.0, 1.0, 5.0, 10).unwrap();
        assert!(report.fitted_exponent.abs() < 0.02);
    }

    #[test]
    fn strichartz_ratio_of_sup_mass_pair_is_one() {
        let f = Field::gaussian(gaussian_grid());
        let pair = AdmissiblePair::new(f64::INFINITY, 2.0).unwrap();
        let ratio = strichartz_ratio(&f, pair, 2.0).unwrap();
        assert!((ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn strichartz_ratio_rejects_zero_field() {
        let f = Field::zero(gaussian_grid());
        let pair = AdmissiblePair::new(5.0, 10.0).unwrap();
        assert!(matches!(
            strichartz_ratio(&f, pair, 1.0),
            Err(Error::UndefinedRatio(_))
        ));
    }

    #[test]
    fn strichartz_ratio_is_scale_invariant() {
        let f = Field::gaussian(gaussian_grid());
        let pair = AdmissiblePair::new(5.0, 10.0).unwrap();
        let r1 = strichartz_ratio(&f, pair, 1.0).unwrap();
        let r2 = strichartz_ratio(&f.scale(Complex64::new(3.7, 0.0)), pair, 1.0).unwrap();
        assert!((r1 - r2).abs() < 1e-12 * r1);
    }
}
