//! Lebesgue norms on the grid, admissible Strichartz pairs, and the running
//! accumulator behind the truncation factor.
//!
//! Spatial integrals are plain Riemann sums with weight `dx`; that is exact
//! for the trigonometric interpolant (trapezoid rule on a periodic grid) and
//! spectrally accurate for smooth decaying fields.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field;

impl Field {
    /// `(sum_j |f_j|^p dx)^(1/p)` for finite `p >= 1`, `max_j |f_j|` for
    /// `p = infinity`. `p < 1` is an invalid-parameter error.
    pub fn lebesgue_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "Lebesgue exponent must satisfy p >= 1, got {p}"
            )));
        }
        if p == f64::INFINITY {
            let max_sq = self
                .values()
                .iter()
                .map(|v| v.norm_sqr())
                .fold(0.0_f64, f64::max);
            return Ok(max_sq.sqrt());
        }
        let dx = self.grid().dx();
        let sum: f64 = if p == 2.0 {
            self.values().iter().map(|v| v.norm_sqr()).sum()
        } else if p.fract() == 0.0 && (p as u32) % 2 == 0 {
            // even integer exponents avoid sqrt entirely
            let half = (p as i32) / 2;
            self.values().iter().map(|v| v.norm_sqr().powi(half)).sum()
        } else {
            self.values().iter().map(|v| v.norm().powf(p)).sum()
        };
        Ok((sum * dx).powf(1.0 / p))
    }

    /// Mass `||f||_2^2`, the conserved quantity of the flow.
    pub fn mass(&self) -> f64 {
        let dx = self.grid().dx();
        self.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * dx
    }

    /// Fraction of the mass sitting at `|x| >= edge_fraction * L`.
    /// The periodization monitor: runs are only meaningful as stand-ins for
    /// the whole line while this stays negligible.
    pub fn boundary_mass_fraction(&self, edge_fraction: f64) -> f64 {
        let total = self.mass();
        if total == 0.0 {
            return 0.0;
        }
        let edge = edge_fraction * self.grid().half_length();
        let dx = self.grid().dx();
        let outer: f64 = self
            .grid()
            .xs()
            .iter()
            .zip(self.values())
            .filter(|(x, _)| x.abs() >= edge)
            .map(|(_, v)| v.norm_sqr())
            .sum::<f64>()
            * dx;
        outer / total
    }

    /// Mass computed on the Fourier side, `sum_k |f_hat_k|^2 * dx / N`.
    /// Equals [`Field::mass`] by Parseval up to roundoff.
    pub fn spectral_mass(&self) -> f64 {
        let mut spec: Vec<Complex64> = self.values().to_vec();
        self.grid().forward(&mut spec);
        let weight = self.grid().dx() / self.grid().points() as f64;
        spec.iter().map(|v| v.norm_sqr()).sum::<f64>() * weight
    }

    /// Fraction of spectral mass carried by modes with `|k| >= k_threshold`.
    /// Used by resolution guards.
    pub fn spectral_mass_above(&self, k_threshold: f64) -> f64 {
        let mut spec: Vec<Complex64> = self.values().to_vec();
        self.grid().forward(&mut spec);
        let total: f64 = spec.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let high: f64 = spec
            .iter()
            .zip(self.grid().wavenumbers())
            .filter(|(_, k)| k.abs() >= k_threshold)
            .map(|(v, _)| v.norm_sqr())
            .sum();
        high / total
    }
}

/// A space-time exponent pair `(q, r)`. Admissible in one dimension when
/// `2/q + 1/r = 1/2`, with `1/inf := 0`. Infinite exponents are represented
/// by `f64::INFINITY`, never by large finite floats.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmissiblePair {
    pub q: f64,
    pub r: f64,
}

impl AdmissiblePair {
    pub fn new(q: f64, r: f64) -> Result<Self> {
        if is_admissible(q, r) {
            Ok(Self { q, r })
        } else {
            Err(Error::InvalidParameter(format!(
                "({q}, {r}) is not an admissible pair"
            )))
        }
    }
}

/// `2/q + 1/r = 1/2` within 1e-12, requiring `q, r >= 2`.
/// Out-of-range exponents yield `false`, not an error.
pub fn is_admissible(q: f64, r: f64) -> bool {
    if q.is_nan() || r.is_nan() || q < 2.0 || r < 2.0 {
        return false;
    }
    let lhs = 2.0 / q + 1.0 / r;
    (lhs - 0.5).abs() <= 1e-12
}

/// Running space-time norm data for one trajectory:
/// `power_integral` accumulates `int_0^t ||u(s)||_{L^10}^5 ds` by the
/// left-endpoint rule, `sup_mass` tracks `sup_{s<=t} ||u(s)||_{L^2}`.
/// Both are nondecreasing in time, which makes the truncation factor
/// computed from them nonincreasing along any trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StrichartzAccumulator {
    power_integral: f64,
    sup_mass: f64,
}

impl StrichartzAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn power_integral(&self) -> f64 {
        self.power_integral
    }

    pub fn sup_mass(&self) -> f64 {
        self.sup_mass
    }

    /// Add the left-endpoint contribution of one time slab of width `dt`,
    /// where `l10_pow5` is `||u||_{L^10}^5` evaluated at the slab's left end.
    pub fn add_time_slab(&mut self, dt: f64, l10_pow5: f64) {
        debug_assert!(dt >= 0.0 && l10_pow5 >= 0.0);
        self.power_integral += dt * l10_pow5;
    }

    /// Fold one observed `||u||_{L^2}` into the running sup.
    pub fn record_l2(&mut self, l2: f64) {
        if l2 > self.sup_mass {
            self.sup_mass = l2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpectralGrid;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn grid() -> std::sync::Arc<SpectralGrid> {
        SpectralGrid::new(10.0, 256).unwrap()
    }

    #[test]
    fn constant_field_l2_norm_is_sqrt_box_length() {
        // f == 1 on [-10, 10): integral of 1 over the box is 2L = 20.
        let f = Field::from_fn(grid(), |_| Complex64::new(1.0, 0.0));
        let got = f.lebesgue_norm(2.0).unwrap();
        assert!((got - 20.0_f64.sqrt()).abs() < 1e-12);
        assert!((f.mass() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn zero_field_has_zero_norm_for_all_p() {
        let f = Field::zero(grid());
        for p in [1.0, 2.0, 5.0, 10.0, f64::INFINITY] {
            assert_eq!(f.lebesgue_norm(p).unwrap(), 0.0);
        }
        assert_eq!(f.mass(), 0.0);
    }

    #[test]
    fn gaussian_l2_norm_matches_quadrature_oracle() {
        // Oracle: high-precision quadrature of int exp(-2x^2) dx = sqrt(pi/2),
        // evaluated by Simpson's rule on a fine grid over [-40, 40].
        let oracle = {
            let n = 200_000usize;
            let (a, b) = (-40.0_f64, 40.0_f64);
            let h = (b - a) / n as f64;
            let g = |x: f64| (-2.0 * x * x).exp();
            let mut s = g(a) + g(b);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * g(a + i as f64 * h);
            }
            (s * h / 3.0).sqrt()
        };
        assert!((oracle - (std::f64::consts::PI / 2.0).powf(0.25)).abs() < 1e-12);

        let g = SpectralGrid::new(40.0, 4096).unwrap();
        let f = Field::gaussian(g);
        let got = f.lebesgue_norm(2.0).unwrap();
        assert!(
            (got - oracle).abs() < 1e-10,
            "got {got}, oracle {oracle}"
        );
    }

    #[test]
    fn invalid_exponent_is_rejected() {
        let f = Field::zero(grid());
        assert!(f.lebesgue_norm(0.5).is_err());
        assert!(f.lebesgue_norm(f64::NAN).is_err());
    }

    #[test]
    fn admissible_pairs() {
        assert!(is_admissible(5.0, 10.0));
        assert!(is_admissible(f64::INFINITY, 2.0));
        assert!(!is_admissible(4.0, 8.0));
        assert!(!is_admissible(1.0, -2.0));
        assert!(AdmissiblePair::new(4.0, 8.0).is_err());
        assert!(AdmissiblePair::new(6.0, 6.0).is_ok());
    }

    #[test]
    fn parseval_holds_for_random_field() {
        let g = grid();
        let f = Field::from_fn(g, |x| Complex64::new((3.0 * x).sin(), (x * 0.5).cos()));
        let rel = (f.mass() - f.spectral_mass()).abs() / f.mass();
        assert!(rel < 1e-12, "Parseval violated: rel err {rel}");
    }

    #[test]
    fn accumulator_is_monotone() {
        let mut acc = StrichartzAccumulator::new();
        acc.add_time_slab(0.1, 2.0);
        acc.record_l2(1.0);
        let p1 = acc.power_integral();
        acc.add_time_slab(0.1, 0.0);
        acc.record_l2(0.5);
        assert!(acc.power_integral() >= p1);
        assert_eq!(acc.sup_mass(), 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        /// Hoelder on a bounded domain:
        /// ||f||_p <= (2L)^(1/p - 1/q) ||f||_q for p < q.
        #[test]
        fn hoelder_between_exponents(
            seed in 0u64..1000,
            pi in 0usize..4,
            qi in 0usize..4,
        ) {
            prop_assume!(pi < qi);
            let exps = [1.0, 2.0, 5.0, f64::INFINITY];
            let (p, q) = (exps[pi], exps[qi]);
            let g = grid();
            let f = Field::from_fn(g.clone(), |x| {
                let s = (x * (seed % 7 + 1) as f64).sin();
                let c = (x * (seed % 5 + 1) as f64 * 0.37).cos();
                Complex64::new(s * (seed as f64 * 1e-3).cos(), c)
            });
            let two_l = 2.0 * g.half_length();
            let inv_q = if q == f64::INFINITY { 0.0 } else { 1.0 / q };
            let bound = two_l.powf(1.0 / p - inv_q) * f.lebesgue_norm(q).unwrap();
            let lhs = f.lebesgue_norm(p).unwrap();
            prop_assert!(lhs <= bound * (1.0 + 1e-12));
        }
    }
}
