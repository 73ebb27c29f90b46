//! Complex-valued state sampled on a spectral grid, tagged with the time it
//! represents.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::SpectralGrid;

/// A field `u(t, .)` on the grid. Value-semantic: cloning copies the samples,
/// the grid itself is shared.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<SpectralGrid>,
    values: Vec<Complex64>,
    time: f64,
}

impl Field {
    pub fn new(grid: Arc<SpectralGrid>, values: Vec<Complex64>, time: f64) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(Error::InvalidParameter(format!(
                "field length {} does not match grid size {}",
                values.len(),
                grid.points()
            )));
        }
        Ok(Self { grid, values, time })
    }

    /// Zero field at time 0.
    pub fn zero(grid: Arc<SpectralGrid>) -> Self {
        let n = grid.points();
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
            time: 0.0,
        }
    }

    /// Sample a complex-valued function of x at time 0.
    pub fn from_fn(grid: Arc<SpectralGrid>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.xs().iter().map(|&x| f(x)).collect();
        Self {
            grid,
            values,
            time: 0.0,
        }
    }

    /// `exp(-x^2)` at time 0, the workhorse initial datum.
    pub fn gaussian(grid: Arc<SpectralGrid>) -> Self {
        Self::from_fn(grid, |x| Complex64::new((-x * x).exp(), 0.0))
    }

    /// Plane wave `exp(i k0 x)`; `k0` should be a grid wavenumber for the
    /// wave to be an exact eigenfunction of the discrete Laplacian.
    pub fn plane_wave(grid: Arc<SpectralGrid>, k0: f64) -> Self {
        Self::from_fn(grid, |x| Complex64::from_polar(1.0, k0 * x))
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Complex conjugate, keeping the time tag.
    pub fn conj(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.conj()).collect(),
            time: self.time,
        }
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * a).collect(),
            time: self.time,
        }
    }

    /// Pointwise sum; both fields must live on the same box.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_box(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
            time: self.time,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_box(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
            time: self.time,
        })
    }

    pub fn check_same_box(&self, other: &Self) -> Result<()> {
        if !self.grid.same_box(other.grid()) {
            return Err(Error::InvalidParameter(
                "fields live on different grids".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_mismatch_is_rejected() {
        let g = SpectralGrid::new(10.0, 64).unwrap();
        assert!(Field::new(g, vec![Complex64::new(1.0, 0.0); 32], 0.0).is_err());
    }

    #[test]
    fn conj_is_involutive() {
        let g = SpectralGrid::new(10.0, 64).unwrap();
        let f = Field::from_fn(g, |x| Complex64::new(x.sin(), x.cos()));
        let back = f.conj().conj();
        for (a, b) in back.values().iter().zip(f.values()) {
            assert_eq!(a, b);
        }
    }
}
