//! Periodic spectral grid: the discrete stand-in for the real line.
//!
//! The spatial domain is the box `[-L, L)` with `N` equispaced points and
//! periodic boundary conditions. Fields are expanded in plane waves
//! `exp(i k_j x)` with `k_j = pi * j / L`, `j = -N/2 .. N/2 - 1`, so the
//! Laplacian and the free Schrödinger group are exact diagonal multipliers
//! in Fourier space. Periodization error is monitored (not analysed): the
//! boundary-mass fraction of a field must stay negligible for a run to be
//! meaningful on the line.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Periodic truncation of the line: half-length, point count, wavenumbers,
/// quadrature weight, and FFT plans for this size.
pub struct SpectralGrid {
    half_length: f64,
    points: usize,
    dx: f64,
    xs: Vec<f64>,
    /// Wavenumbers in FFT bin order: bin j holds `pi*j/L` for `j < N/2`
    /// and `pi*(j-N)/L` for `j >= N/2`.
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("half_length", &self.half_length)
            .field("points", &self.points)
            .field("dx", &self.dx)
            .finish()
    }
}

impl SpectralGrid {
    /// Build a grid on `[-half_length, half_length)` with `points` nodes.
    ///
    /// `points` must be a power of two and at least 8; `half_length` must be
    /// positive. `dx * N == 2L` holds exactly because N is a power of two.
    pub fn new(half_length: f64, points: usize) -> Result<Arc<Self>> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "half_length must be positive and finite, got {half_length}"
            )));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "points must be a power of two >= 8, got {points}"
            )));
        }
        let n = points;
        let dx = 2.0 * half_length / n as f64;
        let half = (n / 2) as i64;
        let xs: Vec<f64> = (0..n).map(|j| (j as i64 - half) as f64 * dx).collect();
        let wavenumbers: Vec<f64> = (0..n)
            .map(|j| {
                let signed = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
                std::f64::consts::PI * signed as f64 / half_length
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Arc::new(Self {
            half_length,
            points,
            dx,
            xs,
            wavenumbers,
            forward,
            inverse,
        }))
    }

    /// The default desk-scale box: `L = 40*pi`, `N = 4096`.
    pub fn default_box() -> Arc<Self> {
        Self::new(40.0 * std::f64::consts::PI, 4096).expect("default box parameters are valid")
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Grid spacing; `dx * points == 2 * half_length` exactly.
    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Node coordinates `x_j = -L + j*dx`.
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// Wavenumbers in FFT bin order (see type docs).
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Largest resolvable wavenumber magnitude, `pi * N / (2L)`.
    pub fn max_wavenumber(&self) -> f64 {
        std::f64::consts::PI * (self.points / 2) as f64 / self.half_length
    }

    /// Unnormalized forward DFT in place.
    pub fn forward(&self, values: &mut [Complex64]) {
        debug_assert_eq!(values.len(), self.points);
        self.forward.process(values);
    }

    /// Inverse DFT in place, normalized so `inverse(forward(v)) == v`.
    pub fn inverse(&self, values: &mut [Complex64]) {
        debug_assert_eq!(values.len(), self.points);
        self.inverse.process(values);
        let scale = 1.0 / self.points as f64;
        for v in values.iter_mut() {
            *v *= scale;
        }
    }

    /// Scratch length sufficient for both transform directions; allocate one
    /// buffer per worker and reuse it in stepping loops.
    pub fn scratch_len(&self) -> usize {
        self.forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len())
    }

    /// Forward DFT using caller-provided scratch (hot-loop variant).
    pub fn forward_with_scratch(&self, values: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(values, scratch);
    }

    /// Normalized inverse DFT using caller-provided scratch.
    pub fn inverse_with_scratch(&self, values: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inverse.process_with_scratch(values, scratch);
        let scale = 1.0 / self.points as f64;
        for v in values.iter_mut() {
            *v *= scale;
        }
    }

    /// Two grids are compatible when they discretize the same box.
    pub fn same_box(&self, other: &Self) -> bool {
        self.points == other.points && self.half_length == other.half_length
    }
}

/// Check the structural invariants of a grid. Used by tests; cheap enough
/// to call ad hoc.
pub fn check_invariants(grid: &SpectralGrid) -> Result<()> {
    let n = grid.points();
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::InvalidParameter("points not a power of two >= 8".into()));
    }
    if grid.dx() * n as f64 != 2.0 * grid.half_length() {
        return Err(Error::InvalidParameter("dx * N != 2L".into()));
    }
    // Wavenumbers symmetric about zero except the lone Nyquist mode.
    let mut ks: Vec<f64> = grid.wavenumbers().to_vec();
    ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nyquist = -grid.max_wavenumber();
    if ks[0] != nyquist {
        return Err(Error::InvalidParameter("missing Nyquist mode".into()));
    }
    for (i, k) in ks[1..].iter().enumerate() {
        let mirror = ks[n - 1 - i];
        if (k + mirror).abs() > 1e-12 * grid.max_wavenumber() {
            return Err(Error::InvalidParameter(format!(
                "wavenumbers not symmetric: {k} vs {mirror}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(SpectralGrid::new(-1.0, 64).is_err());
        assert!(SpectralGrid::new(10.0, 100).is_err());
        assert!(SpectralGrid::new(10.0, 4).is_err());
    }

    #[test]
    fn dx_times_n_is_exactly_box_length() {
        for n in [8usize, 64, 1024, 4096] {
            let g = SpectralGrid::new(40.0 * std::f64::consts::PI, n).unwrap();
            assert_eq!(g.dx() * n as f64, 2.0 * g.half_length());
        }
    }

    #[test]
    fn invariants_hold_for_default_box() {
        let g = SpectralGrid::default_box();
        assert_eq!(g.points(), 4096);
        check_invariants(&g).unwrap();
    }

    #[test]
    fn roundtrip_transform_is_identity() {
        let g = SpectralGrid::new(10.0, 64).unwrap();
        let mut v: Vec<Complex64> = (0..64)
            .map(|j| Complex64::new((j as f64).sin(), (j as f64 * 0.7).cos()))
            .collect();
        let orig = v.clone();
        g.forward(&mut v);
        g.inverse(&mut v);
        for (a, b) in v.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
