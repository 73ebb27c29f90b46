//! Run configuration: a TOML file with sections mirroring the experiment
//! parameters, plus CLI overrides for seed, path count, output directory and
//! thread count.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpectralGrid;
use crate::integrator::Scheme;
use crate::noise::{build_noise_model, NoiseModel};

/// Named analytic families of the initial-data bank.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFamily {
    /// `exp(-x^2)`.
    Gaussian,
    /// `exp(2ix) exp(-x^2)`.
    Modulated,
    /// `exp(-(x-8)^2) + exp(-(x+8)^2)`.
    TwoBump,
    /// The zero datum.
    Zero,
}

impl DataFamily {
    pub fn name(&self) -> &'static str {
        match self {
            DataFamily::Gaussian => "gaussian",
            DataFamily::Modulated => "modulated",
            DataFamily::TwoBump => "two-bump",
            DataFamily::Zero => "zero",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub half_length: f64,
    pub points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            half_length: 10.0 * std::f64::consts::PI,
            points: 512,
        }
    }
}

impl GridSection {
    pub fn build(&self) -> Result<Arc<SpectralGrid>> {
        SpectralGrid::new(self.half_length, self.points)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    /// Subcritical exponents of the sweep.
    pub epsilons: Vec<f64>,
    /// Truncation levels; `inf` disables truncation.
    pub truncation_scales: Vec<f64>,
    /// Defocusing couplings.
    pub couplings: Vec<f64>,
    /// Offset added inside the truncation argument.
    pub offset: f64,
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            epsilons: vec![0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0],
            truncation_scales: vec![0.5, 1.0, 2.0, 4.0, 8.0, f64::INFINITY],
            couplings: vec![1.0],
            offset: 0.0,
            dt: 1e-3,
            horizon: 1.0,
            scheme: Scheme::Strang,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub rank: usize,
    pub decay: f64,
    pub width: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            rank: 8,
            decay: 1.5,
            width: 3.0,
        }
    }
}

impl NoiseSection {
    pub fn build(&self, grid: Arc<SpectralGrid>) -> Result<Arc<NoiseModel>> {
        build_noise_model(self.rank, self.decay, self.width, grid)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BankSection {
    pub families: Vec<DataFamily>,
    /// Target `L^2` norms the data are normalized to.
    pub l2_norms: Vec<f64>,
}

impl Default for BankSection {
    fn default() -> Self {
        Self {
            families: vec![DataFamily::Gaussian, DataFamily::Modulated, DataFamily::TwoBump],
            l2_norms: vec![1.0, 2.0],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    pub paths: usize,
    /// Order of the ensemble power mean; at least 5.
    pub rho: f64,
    pub seed: u64,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        Self {
            paths: 64,
            rho: 5.0,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersiveSection {
    pub half_length: f64,
    pub points: usize,
    pub p: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
}

impl Default for DispersiveSection {
    fn default() -> Self {
        Self {
            half_length: 800.0,
            points: 8192,
            p: 1.0,
            t_min: 1.0,
            t_max: 50.0,
            samples: 25,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilitySection {
    /// Sizes of the initial-data perturbation sweep.
    pub deltas: Vec<f64>,
    pub epsilon: f64,
    pub coupling: f64,
}

impl Default for StabilitySection {
    fn default() -> Self {
        Self {
            deltas: vec![1e-3, 1e-4, 1e-5],
            epsilon: 0.0,
            coupling: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoppingTimeSection {
    /// Truncation levels compared pairwise (adjacent pairs, sorted).
    pub scales: Vec<f64>,
    pub epsilon: f64,
    pub paths: usize,
}

impl Default for StoppingTimeSection {
    fn default() -> Self {
        Self {
            scales: vec![0.25, 0.5, 1.0, 2.0],
            epsilon: 0.5,
            paths: 256,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: "out".into(),
        }
    }
}

/// The whole run configuration.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub solver: SolverSection,
    pub noise: NoiseSection,
    pub bank: BankSection,
    pub monte_carlo: MonteCarloSection,
    pub dispersive: DispersiveSection,
    pub stability: StabilitySection,
    pub stopping_time: StoppingTimeSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    pub fn from_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.monte_carlo.paths < 1 {
            return Err(Error::Config("monte_carlo.paths must be >= 1".into()));
        }
        if self.monte_carlo.rho < 5.0 {
            return Err(Error::Config("monte_carlo.rho must be >= 5".into()));
        }
        if self.solver.epsilons.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::Config("solver.epsilons must lie in [0, 1]".into()));
        }
        if self.solver.couplings.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::Config("solver.couplings must lie in [0, 1]".into()));
        }
        if self
            .solver
            .truncation_scales
            .iter()
            .any(|m| m.is_nan() || *m <= 0.0)
        {
            return Err(Error::Config(
                "solver.truncation_scales must be positive (inf allowed)".into(),
            ));
        }
        if self.solver.offset < 0.0 {
            return Err(Error::Config("solver.offset must be nonnegative".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn roundtrips_through_toml() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back = RunConfig::from_str(&text).unwrap();
        assert_eq!(back.solver.epsilons, cfg.solver.epsilons);
        assert_eq!(back.solver.truncation_scales, cfg.solver.truncation_scales);
    }

    #[test]
    fn infinity_parses_from_toml() {
        let cfg = RunConfig::from_str(
            "[solver]\ntruncation_scales = [1.0, inf]\n",
        )
        .unwrap();
        assert_eq!(cfg.solver.truncation_scales[1], f64::INFINITY);
    }

    #[test]
    fn malformed_fields_are_diagnosed() {
        let err = RunConfig::from_str("[monte_carlo]\nrho = 2.0\n").unwrap_err();
        assert!(err.to_string().contains("rho"));
        let err = RunConfig::from_str("[solver]\nepsilons = [3.0]\n").unwrap_err();
        assert!(err.to_string().contains("epsilons"));
        let err = RunConfig::from_str("[grid]\nnot_a_field = 1\n").unwrap_err();
        assert!(err.to_string().contains("not_a_field"));
    }
}
