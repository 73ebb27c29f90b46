//! Shared oracles for the integration tests: closed forms evaluated
//! independently of the library's solvers.

#![allow(dead_code)]

use std::sync::Arc;

use num_complex::Complex64;
use snls_lab::{Field, SpectralGrid};

/// Closed-form free evolution of `exp(-x^2)`:
/// `u(t, x) = (1 + 4it)^(-1/2) exp(-x^2 / (1 + 4it))`.
pub fn gaussian_free_evolution(grid: &Arc<SpectralGrid>, t: f64) -> Field {
    let denom = Complex64::new(1.0, 4.0 * t);
    let amp = denom.sqrt().inv();
    let mut f = Field::from_fn(grid.clone(), |x| amp * (-(x * x) / denom).exp());
    f.set_time(t);
    f
}

/// `||u(t)||_{L^p}` of the evolved Gaussian in closed form:
/// `|u(t,x)| = (1+16t^2)^(-1/4) exp(-x^2/(1+16t^2))`.
pub fn gaussian_evolution_lp_norm(t: f64, p: f64) -> f64 {
    let s = 1.0 + 16.0 * t * t;
    if p == f64::INFINITY {
        return s.powf(-0.25);
    }
    // integral of exp(-p x^2 / s) = sqrt(pi s / p)
    let integral = (std::f64::consts::PI * s / p).sqrt();
    s.powf(-p / 4.0).powf(1.0 / p) * integral.powf(1.0 / p)
}

/// Simpson quadrature on a closed interval.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 0 { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Least-squares slope of `y` against `x`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    sxy / sxx
}

pub fn l2_gap(a: &Field, b: &Field) -> f64 {
    a.sub(b).unwrap().lebesgue_norm(2.0).unwrap()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}
