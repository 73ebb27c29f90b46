//! Time series produced by the solvers, and the space-time norm functionals
//! evaluated on them.
//!
//! A trajectory stores scalar series (`L^2` and `L^10` norms, truncation
//! factors) at every time node, and full field snapshots at configured
//! stride multiples. The space-time norms use the left-endpoint rule in
//! time — the same causal convention the stepper itself uses to freeze the
//! truncation factor, so the accumulator and `x2_norm` agree exactly on
//! node-aligned intervals.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::integrator::SolverConfig;
use crate::norms::StrichartzAccumulator;

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub(crate) config: SolverConfig,
    /// Node times `t_i = i * dt`, `i = 0..=n_steps`.
    pub(crate) times: Vec<f64>,
    /// `||u(t_i)||_{L^2}` per node.
    pub(crate) l2_norms: Vec<f64>,
    /// `||u(t_i)||_{L^10}^5` per node.
    pub(crate) l10_pow5: Vec<f64>,
    /// Truncation factor frozen at the start of step `i -> i+1`.
    pub(crate) trunc_factors: Vec<f64>,
    /// Field snapshots at `snapshot_indices`, always including both ends.
    pub(crate) snapshots: Vec<Field>,
    pub(crate) snapshot_indices: Vec<usize>,
    pub(crate) accumulator: StrichartzAccumulator,
    pub(crate) noise_path_id: Option<u64>,
    /// First node time at which `offset + power_integral >= scale`, if any.
    pub(crate) stopping_time: Option<f64>,
    /// Largest boundary-mass fraction seen at any node: the periodization
    /// monitor. Runs standing in for the whole line must keep this tiny.
    pub(crate) worst_boundary_fraction: f64,
}

/// Boundary-mass fraction beyond which a run no longer stands in for the
/// line; the experiment harness rejects such runs.
pub const BOUNDARY_REJECT: f64 = 1e-10;

impl Trajectory {
    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn l2_norms(&self) -> &[f64] {
        &self.l2_norms
    }

    pub fn l10_pow5(&self) -> &[f64] {
        &self.l10_pow5
    }

    pub fn trunc_factors(&self) -> &[f64] {
        &self.trunc_factors
    }

    pub fn snapshots(&self) -> &[Field] {
        &self.snapshots
    }

    pub fn snapshot_indices(&self) -> &[usize] {
        &self.snapshot_indices
    }

    pub fn accumulator(&self) -> &StrichartzAccumulator {
        &self.accumulator
    }

    pub fn noise_path_id(&self) -> Option<u64> {
        self.noise_path_id
    }

    pub fn stopping_time(&self) -> Option<f64> {
        self.stopping_time
    }

    pub fn worst_boundary_fraction(&self) -> f64 {
        self.worst_boundary_fraction
    }

    /// Reject trajectories whose boundary mass grew past the periodization
    /// tolerance; used by the harness before any run enters an experiment.
    pub fn check_line_faithful(&self) -> Result<()> {
        if self.worst_boundary_fraction > BOUNDARY_REJECT {
            return Err(Error::BoxTooSmall(format!(
                "boundary mass fraction reached {:.3e}; the box no longer stands in for the line",
                self.worst_boundary_fraction
            )));
        }
        Ok(())
    }

    /// Stopping time with the horizon as fallback: `T` if the accumulated
    /// norm never crossed the truncation level.
    pub fn stopping_time_or_horizon(&self) -> f64 {
        self.stopping_time.unwrap_or(self.config.horizon)
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn initial_field(&self) -> &Field {
        &self.snapshots[0]
    }

    pub fn final_field(&self) -> &Field {
        self.snapshots.last().unwrap()
    }

    /// Map a time to its node index; the time must sit on the step lattice.
    pub fn node_index(&self, t: f64) -> Result<usize> {
        let dt = self.config.dt;
        let rel = (t - self.times[0]) / dt;
        let idx = rel.round() as i64;
        if idx < 0 || idx as usize >= self.times.len() {
            return Err(Error::Range(format!(
                "t = {t} outside the trajectory span [{}, {}]",
                self.start_time(),
                self.end_time()
            )));
        }
        let idx = idx as usize;
        if (self.times[idx] - t).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::Range(format!("t = {t} is not a node time")));
        }
        Ok(idx)
    }

    /// The stored snapshot at time `t`, which must be a snapshot node.
    pub fn snapshot_at(&self, t: f64) -> Result<&Field> {
        let idx = self.node_index(t)?;
        match self.snapshot_indices.binary_search(&idx) {
            Ok(pos) => Ok(&self.snapshots[pos]),
            Err(_) => Err(Error::Range(format!("no snapshot recorded at t = {t}"))),
        }
    }

    /// `sup_{t0 <= t_i <= t1} ||u(t_i)||_{L^2}`, the `L_t^inf L_x^2` part.
    pub fn x1_norm(&self, t0: f64, t1: f64) -> Result<f64> {
        let (i0, i1) = self.index_range(t0, t1)?;
        Ok(self.l2_norms[i0..=i1].iter().cloned().fold(0.0, f64::max))
    }

    /// `(int_{t0}^{t1} ||u(s)||_{L^10}^5 ds)^(1/5)` by the left-endpoint rule
    /// over the stored nodes.
    pub fn x2_norm(&self, t0: f64, t1: f64) -> Result<f64> {
        let (i0, i1) = self.index_range(t0, t1)?;
        let dt = self.config.dt;
        let sum: f64 = self.l10_pow5[i0..i1].iter().sum::<f64>() * dt;
        Ok(sum.powf(0.2))
    }

    /// The well-posedness norm: `x1_norm + x2_norm`.
    pub fn x_norm(&self, t0: f64, t1: f64) -> Result<f64> {
        Ok(self.x1_norm(t0, t1)? + self.x2_norm(t0, t1)?)
    }

    fn index_range(&self, t0: f64, t1: f64) -> Result<(usize, usize)> {
        if t1 < t0 {
            return Err(Error::Range(format!("empty interval [{t0}, {t1}]")));
        }
        Ok((self.node_index(t0)?, self.node_index(t1)?))
    }
}

/// Space-time norms of a scalar difference series sampled on the step
/// lattice; used when two runs are compared in lockstep without keeping
/// full trajectories.
#[derive(Clone, Copy, Debug, Default)]
pub struct DifferenceNorms {
    sup_l2: f64,
    l10_pow5_integral: f64,
}

impl DifferenceNorms {
    pub fn record(&mut self, dt_to_next: f64, l2: f64, l10_pow5: f64) {
        if l2 > self.sup_l2 {
            self.sup_l2 = l2;
        }
        self.l10_pow5_integral += dt_to_next * l10_pow5;
    }

    /// Fold in the final node, which carries no time slab.
    pub fn record_endpoint(&mut self, l2: f64) {
        if l2 > self.sup_l2 {
            self.sup_l2 = l2;
        }
    }

    pub fn x1(&self) -> f64 {
        self.sup_l2
    }

    pub fn x2(&self) -> f64 {
        self.l10_pow5_integral.powf(0.2)
    }

    pub fn x(&self) -> f64 {
        self.x1() + self.x2()
    }
}
