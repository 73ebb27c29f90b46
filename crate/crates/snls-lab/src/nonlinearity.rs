//! The defocusing power nonlinearity, the smooth cutoff profile, and the
//! truncation factor driven by the running space-time norm.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::norms::StrichartzAccumulator;

/// Exponent data of the nonlinearity `coupling * |u|^(4 - epsilon) * u`.
/// `epsilon = 0` is the mass-critical power, `epsilon in (0, 1]` the
/// subcritical family; `coupling` interpolates the strength in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityExponent {
    pub epsilon: f64,
    pub coupling: f64,
}

impl NonlinearityExponent {
    pub fn new(epsilon: f64, coupling: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) || !(0.0..=1.0).contains(&coupling) {
            return Err(Error::InvalidParameter(format!(
                "need epsilon, coupling in [0,1]; got ({epsilon}, {coupling})"
            )));
        }
        Ok(Self { epsilon, coupling })
    }

    /// Full-strength mass-critical nonlinearity.
    pub fn critical() -> Self {
        Self { epsilon: 0.0, coupling: 1.0 }
    }

    /// `coupling * |z|^(4 - epsilon) * z` with the removable singularity at
    /// zero filled in by zero.
    pub fn apply_scalar(&self, z: Complex64) -> Complex64 {
        let a = z.norm_sqr();
        if a == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let magnitude = if self.epsilon == 0.0 {
            a * a
        } else {
            a.powf((4.0 - self.epsilon) / 2.0)
        };
        z * (self.coupling * magnitude)
    }

    /// Phase-rotation rate `coupling * |z|^(4 - epsilon)` used by the exact
    /// nonlinear substep.
    pub fn phase_rate(&self, z: Complex64) -> f64 {
        let a = z.norm_sqr();
        if a == 0.0 {
            return 0.0;
        }
        let magnitude = if self.epsilon == 0.0 {
            a * a
        } else {
            a.powf((4.0 - self.epsilon) / 2.0)
        };
        self.coupling * magnitude
    }
}

/// Apply the nonlinearity pointwise to a field.
pub fn apply_nonlinearity(f: &Field, exp: NonlinearityExponent) -> Field {
    let mut out = f.clone();
    for v in out.values_mut() {
        *v = exp.apply_scalar(*v);
    }
    out
}

/// Shape of the transition of the cutoff on `(1, 2)`. The exponential bump
/// is the default; a polynomial smoothstep is kept around to probe that
/// results do not depend on the profile choice.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffProfile {
    /// `psi(2-x) / (psi(2-x) + psi(x-1))` with `psi(s) = exp(-1/s)` for
    /// `s > 0`: the standard smooth partition-of-unity transition.
    #[default]
    ExponentialBump,
    /// Quintic smoothstep `1 - (6t^5 - 15t^4 + 10t^3)` with `t = x - 1`.
    /// C^2 rather than C^infinity; close enough to probe profile robustness.
    Smoothstep,
}

impl CutoffProfile {
    /// Evaluate the profile: 1 on `[0,1]`, 0 on `[2, inf)`, monotone
    /// nonincreasing in between. Negative arguments are invalid.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "cutoff argument must be nonnegative, got {x}"
            )));
        }
        if x <= 1.0 {
            return Ok(1.0);
        }
        if x >= 2.0 {
            return Ok(0.0);
        }
        Ok(match self {
            CutoffProfile::ExponentialBump => {
                let psi = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
                let up = psi(2.0 - x);
                up / (up + psi(x - 1.0))
            }
            CutoffProfile::Smoothstep => {
                let t = x - 1.0;
                1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
            }
        })
    }
}

/// The default smooth cutoff: 1 on `[0,1]`, 0 on `[2, inf)`, the exponential
/// partition-of-unity transition in between.
pub fn smooth_cutoff(x: f64) -> Result<f64> {
    CutoffProfile::ExponentialBump.eval(x)
}

/// Truncation data: the rescaled cutoff evaluates the running space-time
/// norm against the scale `m`, shifted by a fixed offset.
/// `scale = infinity` disables truncation entirely.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    /// Truncation level `m > 0`, possibly `f64::INFINITY`.
    pub scale: f64,
    /// Offset added to the accumulated norm before rescaling (the `A` of the
    /// restarted truncated equations). Nonnegative.
    pub offset: f64,
    pub profile: CutoffProfile,
}

impl CutoffSpec {
    pub fn new(scale: f64, offset: f64) -> Result<Self> {
        Self::with_profile(scale, offset, CutoffProfile::default())
    }

    pub fn with_profile(scale: f64, offset: f64, profile: CutoffProfile) -> Result<Self> {
        if scale.is_nan() || scale <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "cutoff scale must be positive (or infinite), got {scale}"
            )));
        }
        if !(offset.is_finite() && offset >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cutoff offset must be finite and nonnegative, got {offset}"
            )));
        }
        Ok(Self { scale, offset, profile })
    }

    /// No truncation at all.
    pub fn untruncated() -> Self {
        Self {
            scale: f64::INFINITY,
            offset: 0.0,
            profile: CutoffProfile::default(),
        }
    }

    /// The factor multiplying the nonlinearity: the cutoff evaluated at
    /// `(offset + power_integral) / scale`. Along a trajectory the argument
    /// is nondecreasing, so the factor is nonincreasing.
    pub fn truncation_factor(&self, acc: &StrichartzAccumulator) -> Result<f64> {
        self.factor_at(acc.power_integral())
    }

    /// Same as [`Self::truncation_factor`] for a raw accumulated value.
    pub fn factor_at(&self, power_integral: f64) -> Result<f64> {
        if power_integral < 0.0 {
            return Err(Error::InvalidParameter(
                "accumulated power integral must be nonnegative".into(),
            ));
        }
        if self.scale == f64::INFINITY {
            return Ok(1.0);
        }
        self.profile.eval((self.offset + power_integral) / self.scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpectralGrid;
    use proptest::prelude::*;

    #[test]
    fn nonlinearity_point_values() {
        let n = NonlinearityExponent::new(0.0, 1.0).unwrap();
        let got = n.apply_scalar(Complex64::new(2.0, 0.0));
        assert!((got - Complex64::new(32.0, 0.0)).norm() < 1e-12);

        let n = NonlinearityExponent::new(1.0, 1.0).unwrap();
        let got = n.apply_scalar(Complex64::new(0.0, 3.0));
        assert!((got - Complex64::new(0.0, 81.0)).norm() < 1e-12);

        assert_eq!(n.apply_scalar(Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn zero_field_maps_to_zero() {
        let g = SpectralGrid::new(10.0, 64).unwrap();
        let f = Field::zero(g);
        for eps in [0.0, 0.5, 1.0] {
            let n = NonlinearityExponent::new(eps, 1.0).unwrap();
            let out = apply_nonlinearity(&f, n);
            assert!(out.values().iter().all(|v| v.norm() == 0.0));
        }
    }

    #[test]
    fn cutoff_plateau_support_and_transition() {
        assert_eq!(smooth_cutoff(0.5).unwrap(), 1.0);
        assert_eq!(smooth_cutoff(1.0).unwrap(), 1.0);
        assert_eq!(smooth_cutoff(2.0).unwrap(), 0.0);
        assert_eq!(smooth_cutoff(5.0).unwrap(), 0.0);
        let mid = smooth_cutoff(1.5).unwrap();
        assert!(mid > 0.0 && mid < 1.0);
        assert!((mid - 0.5).abs() < 1e-12, "symmetric transition midpoint");
        let a = smooth_cutoff(1.4).unwrap();
        let b = smooth_cutoff(1.5).unwrap();
        let c = smooth_cutoff(1.6).unwrap();
        assert!(a > b && b > c);
        assert!(smooth_cutoff(-0.1).is_err());
    }

    #[test]
    fn smoothstep_profile_mirrors_the_bump_contract() {
        let p = CutoffProfile::Smoothstep;
        assert_eq!(p.eval(1.0).unwrap(), 1.0);
        assert_eq!(p.eval(2.0).unwrap(), 0.0);
        let mid = p.eval(1.5).unwrap();
        assert!((mid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn truncation_factor_plateau_and_support() {
        let mut acc = StrichartzAccumulator::new();
        let cut = CutoffSpec::new(2.0, 0.0).unwrap();
        acc.add_time_slab(1.0, 1.5); // power integral 1.5 <= m = 2
        assert_eq!(cut.truncation_factor(&acc).unwrap(), 1.0);
        acc.add_time_slab(1.0, 3.0); // 4.5 >= 2 m
        assert_eq!(cut.truncation_factor(&acc).unwrap(), 0.0);

        let inf = CutoffSpec::untruncated();
        assert_eq!(inf.truncation_factor(&acc).unwrap(), 1.0);

        assert!(CutoffSpec::new(0.0, 0.0).is_err());
        assert!(CutoffSpec::new(-1.0, 0.0).is_err());
        assert!(CutoffSpec::new(1.0, -0.5).is_err());
    }

    #[test]
    fn offset_shifts_the_argument() {
        let acc = StrichartzAccumulator::new();
        let cut = CutoffSpec::new(1.0, 1.5).unwrap();
        // power integral 0, offset 1.5 -> argument 1.5 in the transition
        let f = cut.truncation_factor(&acc).unwrap();
        assert!((f - 0.5).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Rescaling identity: theta_m(x) = theta_1(x/m) exactly.
        #[test]
        fn rescaling_identity(x in 0.0f64..10.0, m in 0.01f64..100.0) {
            let scaled = CutoffSpec::new(m, 0.0).unwrap().factor_at(x).unwrap();
            let unit = CutoffSpec::new(1.0, 0.0).unwrap().factor_at(x / m).unwrap();
            prop_assert_eq!(scaled, unit);
        }

        /// Gauge covariance: the nonlinearity commutes with constant phases.
        #[test]
        fn gauge_covariance(re in -3.0f64..3.0, im in -3.0f64..3.0, phi in 0.0f64..6.3, eps in 0.0f64..1.0) {
            let n = NonlinearityExponent::new(eps, 1.0).unwrap();
            let z = Complex64::new(re, im);
            let rot = Complex64::from_polar(1.0, phi);
            let lhs = n.apply_scalar(rot * z);
            let rhs = rot * n.apply_scalar(z);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        }

        /// |N^eps(z)| = coupling * |z|^(5 - eps) pointwise.
        #[test]
        fn magnitude_identity(re in -3.0f64..3.0, im in -3.0f64..3.0, eps in 0.0f64..1.0, mu in 0.0f64..1.0) {
            let n = NonlinearityExponent::new(eps, mu).unwrap();
            let z = Complex64::new(re, im);
            let lhs = n.apply_scalar(z).norm();
            let rhs = mu * z.norm().powf(5.0 - eps);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }

        /// Lipschitz continuity in epsilon on bounded sets (|z| <= 10).
        #[test]
        fn continuity_in_epsilon(
            re in -10.0f64..10.0,
            im in -3.0f64..3.0,
            e1 in 0.0f64..1.0,
            de in 0.0f64..0.01,
        ) {
            let e2 = (e1 + de).min(1.0);
            let n1 = NonlinearityExponent::new(e1, 1.0).unwrap();
            let n2 = NonlinearityExponent::new(e2, 1.0).unwrap();
            let z = Complex64::new(re, im);
            let gap = (n1.apply_scalar(z) - n2.apply_scalar(z)).norm();
            // |d/de |z|^(4-e)| = |ln |z|| |z|^(4-e); bound the constant on |z| <= 10.
            let c = 2.6e5;
            prop_assert!(gap <= (e2 - e1) * c + 1e-12);
        }

        /// The factor is nonincreasing as the accumulator grows.
        #[test]
        fn factor_monotone_in_accumulator(m in 0.1f64..10.0, a in 0.0f64..2.0, x1 in 0.0f64..20.0, dx in 0.0f64..5.0) {
            let cut = CutoffSpec::new(m, a).unwrap();
            let f1 = cut.factor_at(x1).unwrap();
            let f2 = cut.factor_at(x1 + dx).unwrap();
            prop_assert!(f2 <= f1 + 1e-15);
        }
    }
}
