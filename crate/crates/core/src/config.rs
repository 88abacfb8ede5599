//! JSON run configuration.
//!
//! ```json
//! {
//!   "scenario": "demo-1d",
//!   "model": { "kind": "rw1d", "q": 1.0, "r": 4.0 },
//!   "steps": 15,
//!   "particles": 200,
//!   "prior": { "mean": [0.0], "std": [2.0] },
//!   "initial_truth": [0.0],
//!   "resampler": "systematic",
//!   "threshold_fraction": 0.5,
//!   "estimator": "mean",
//!   "seed": 7,
//!   "dump_particles": [0, 5]
//! }
//! ```
//!
//! `initial_truth` defaults to the zero vector, `seed` and `dump_particles`
//! are optional. Validation errors name the offending field path.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::filter::{Estimator, GaussianPrior};
use crate::models::{BuiltinModel, ConstantVelocity2D, RandomWalk1D, StateDim};
use crate::particle::StateVector;
use crate::resampling::{ResamplePolicy, ResampleScheme};
use crate::sim::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelConfig {
    Rw1d { q: f64, r: f64 },
    Cv2d { dt: f64, q_pos: f64, q_vel: f64, r_meas: f64 },
}

impl ModelConfig {
    pub fn state_dim(&self) -> usize {
        match self {
            ModelConfig::Rw1d { .. } => 1,
            ModelConfig::Cv2d { .. } => 4,
        }
    }

    pub fn build(&self) -> Result<BuiltinModel, ConfigError> {
        let check = |field: &str, v: f64| -> Result<(), ConfigError> {
            if !v.is_finite() || v < 0.0 {
                Err(ConfigError::new(format!("model.{field}"), format!("must be finite and >= 0, got {v}")))
            } else {
                Ok(())
            }
        };
        match *self {
            ModelConfig::Rw1d { q, r } => {
                check("q", q)?;
                check("r", r)?;
                Ok(RandomWalk1D::new(q, r).map_err(|e| ConfigError::new("model", e.to_string()))?.into())
            }
            ModelConfig::Cv2d { dt, q_pos, q_vel, r_meas } => {
                check("dt", dt)?;
                check("q_pos", q_pos)?;
                check("q_vel", q_vel)?;
                check("r_meas", r_meas)?;
                Ok(ConstantVelocity2D::new(dt, q_pos, q_vel, r_meas)
                    .map_err(|e| ConfigError::new("model", e.to_string()))?
                    .into())
            }
        }
    }
}

impl From<&BuiltinModel> for ModelConfig {
    fn from(m: &BuiltinModel) -> Self {
        match m {
            BuiltinModel::RandomWalk1D(m) => ModelConfig::Rw1d { q: m.q(), r: m.r() },
            BuiltinModel::ConstantVelocity2D(m) => ModelConfig::Cv2d {
                dt: m.dt(),
                q_pos: m.q_pos(),
                q_vel: m.q_vel(),
                r_meas: m.r_meas(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    pub model: ModelConfig,
    pub steps: usize,
    pub particles: usize,
    pub prior: PriorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_truth: Option<Vec<f64>>,
    pub resampler: ResampleScheme,
    pub threshold_fraction: f64,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dump_particles: Vec<usize>,
}

/// A validation or parse failure tied to a field path such as `prior.std[2]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::new(path, e.into_inner().to_string())
        })
    }

    /// Reads and parses (but does not validate) a config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every field and builds the scenario it describes.
    pub fn to_scenario(&self) -> Result<Scenario, ConfigError> {
        let model = self.model.build()?;
        let n = model.state_dim();
        if self.steps == 0 {
            return Err(ConfigError::new("steps", "must be at least 1"));
        }
        if self.particles == 0 {
            return Err(ConfigError::new("particles", "must be at least 1"));
        }
        check_vector("prior.mean", &self.prior.mean, n)?;
        check_vector("prior.std", &self.prior.std, n)?;
        if let Some(i) = self.prior.std.iter().position(|s| *s < 0.0) {
            return Err(ConfigError::new(format!("prior.std[{i}]"), "must be >= 0"));
        }
        let prior = GaussianPrior::new(self.prior.mean.clone(), self.prior.std.clone())
            .map_err(|e| ConfigError::new("prior", e.to_string()))?;
        let initial_truth = match &self.initial_truth {
            Some(v) => {
                check_vector("initial_truth", v, n)?;
                StateVector::new(v.clone()).map_err(|e| ConfigError::new("initial_truth", e.to_string()))?
            }
            None => StateVector::zeros(n),
        };
        if !(0.0..=1.0).contains(&self.threshold_fraction) {
            return Err(ConfigError::new(
                "threshold_fraction",
                format!("must lie in [0, 1], got {}", self.threshold_fraction),
            ));
        }
        let policy = ResamplePolicy::new(self.resampler, self.threshold_fraction)
            .map_err(|e| ConfigError::new("threshold_fraction", e.to_string()))?;
        if let Some(i) = self.dump_particles.iter().position(|&k| k >= self.steps) {
            return Err(ConfigError::new(
                format!("dump_particles[{i}]"),
                format!("step {} is outside 0..{}", self.dump_particles[i], self.steps),
            ));
        }
        Ok(Scenario {
            name: self.scenario.clone(),
            model,
            horizon: self.steps,
            prior,
            initial_truth,
            n_particles: self.particles,
            policy,
            estimator: self.estimator,
            dump_steps: self.dump_particles.clone(),
        })
    }

    pub fn from_scenario(scenario: &Scenario, seed: Option<u64>) -> Self {
        RunConfig {
            scenario: scenario.name.clone(),
            model: ModelConfig::from(&scenario.model),
            steps: scenario.horizon,
            particles: scenario.n_particles,
            prior: PriorConfig {
                mean: scenario.prior.mean().as_slice().to_vec(),
                std: scenario.prior.std().to_vec(),
            },
            initial_truth: Some(scenario.initial_truth.as_slice().to_vec()),
            resampler: scenario.policy.scheme(),
            threshold_fraction: scenario.policy.threshold_fraction(),
            estimator: scenario.estimator,
            seed,
            dump_particles: scenario.dump_steps.clone(),
        }
    }
}

fn check_vector(path: &str, v: &[f64], n: usize) -> Result<(), ConfigError> {
    if v.len() != n {
        return Err(ConfigError::new(path, format!("expected {n} components, got {}", v.len())));
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(ConfigError::new(format!("{path}[{i}]"), "must be finite"));
    }
    Ok(())
}
