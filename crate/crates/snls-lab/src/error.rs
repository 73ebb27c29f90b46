//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A time or index falls outside the span covered by a trajectory.
    #[error("out of range: {0}")]
    Range(String),

    /// Requested transform parameters exceed what the grid can resolve
    /// (oscillation above the Nyquist guard or support leaving the box).
    #[error("grid resolution exceeded: {0}")]
    Resolution(String),

    /// The boundary-mass monitor tripped: too much mass near the edge of
    /// the periodic box for the run to stand in for the whole line.
    #[error("box too small: {0}")]
    BoxTooSmall(String),

    /// Non-finite values or unacceptable mass drift during time stepping.
    /// Should never trigger in the defocusing regime; if it does, the
    /// failing time is part of the diagnostics.
    #[error("numerical blow-up at t = {time}: {detail}")]
    BlowUp { time: f64, detail: String },

    /// A least-squares fit had degenerate input (e.g. zero field).
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Ratio of norms is undefined because the denominator vanishes.
    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    /// Problems reading or interpreting a run configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
