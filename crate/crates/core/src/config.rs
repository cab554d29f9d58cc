//! Run configuration: built-in defaults overlaid by a structured-text file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::controllers::ControllerSettings;
use crate::error::{invalid, Error, Result};
use crate::plant::PlantParams;
use crate::sim::{Bench, Scenario, BACKDRIVE_AMPLITUDE_M};
use crate::synthesis::{hash_of, CostWeights, GainSet, NoiseCovariances};

/// Settings shared by every experiment of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Joint displacement amplitude at the slave piston for backdrive runs (m).
    pub backdrive_amplitude_m: f64,
    /// Adds white sensor noise with the estimator's measurement variances.
    pub sensor_noise: bool,
    /// Sine-dwell grid (Hz); empty selects the default grid.
    pub dwell_frequencies_hz: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            backdrive_amplitude_m: BACKDRIVE_AMPLITUDE_M,
            sensor_noise: false,
            dwell_frequencies_hz: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

/// Everything that determines a run's outputs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub plant: PlantParams,
    pub controllers: ControllerSettings,
    pub weights: CostWeights,
    pub noise: NoiseCovariances,
    pub scenario: Scenario,
    pub experiment: ExperimentConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Parses a file body over the defaults; unknown keys are rejected.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical serialized form, ignoring the output location.
    pub fn hash(&self) -> String {
        hash_of(&Self {
            output: OutputConfig::default(),
            ..self.clone()
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        self.controllers.validate()?;
        self.weights.validate()?;
        self.noise.validate()?;
        self.scenario.validate()?;
        if !(self.experiment.backdrive_amplitude_m >= 0.0 && self.experiment.backdrive_amplitude_m.is_finite()) {
            return Err(invalid("backdrive_amplitude_m", "must be non-negative"));
        }
        if self
            .experiment
            .dwell_frequencies_hz
            .iter()
            .any(|&f| !(f > 0.0 && f <= 200.0))
        {
            return Err(invalid("dwell_frequencies_hz", "frequencies must lie in (0, 200] Hz"));
        }
        Ok(())
    }

    /// Scenario with the run's seed and noise settings applied.
    pub fn resolved_scenario(&self) -> Scenario {
        let mut sc = self.scenario;
        sc.seed = self.seed;
        sc.noise = self.experiment.sensor_noise;
        sc.noise_variances = self.noise.r_l;
        sc
    }

    pub fn dwell_grid(&self) -> Vec<f64> {
        if self.experiment.dwell_frequencies_hz.is_empty() {
            crate::analysis::default_dwell_grid()
        } else {
            self.experiment.dwell_frequencies_hz.clone()
        }
    }

    /// Experiment bench running with `gains`.
    pub fn bench(&self, gains: GainSet) -> Bench {
        let mut b = Bench::new(self.plant, self.controllers, gains);
        b.backdrive_amplitude_m = self.experiment.backdrive_amplitude_m;
        b.noise = self.experiment.sensor_noise;
        b.noise_variances = self.noise.r_l;
        b.seed = self.seed;
        b.plant_dt = self.scenario.plant_dt;
        b.control_dt = self.scenario.control_dt;
        b
    }
}
