//! Replays hand-worked filter steps stored as JSON fixtures.
//!
//! A fixture describes one step from an equally weighted set:
//!
//! ```json
//! {
//!   "initial_particles": [-1.5, 0.2, 1.0, 2.5, 3.0],
//!   "noises": [0.3, -0.4, 1.0, -0.2, 0.5],
//!   "z": 3.2,
//!   "expected_predicted": [-1.2, -0.2, 2.0, 2.3, 3.5],
//!   "expected_weights": [0.03, 0.08, 0.27, 0.30, 0.32],
//!   "tolerance": 0.005
//! }
//! ```
//!
//! Vectors may be written as bare numbers for one-dimensional models. Optional
//! keys: `model` (same shape as in run configs, default `rw1d` with `q = 1`,
//! `r = 4`), `predicted_tolerance` (default `1e-9`),
//! `expected_likelihood_factors` with `likelihood_tolerance` (the Gaussian
//! likelihood with its `1/sqrt((2π)^o |R|)` factor removed).

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::error::Error;
use crate::filter::{Estimator, ParticleFilter};
use crate::models::MeasurementModel;
use crate::particle::{ParticleSet, StateVector};
use crate::resampling::{ResamplePolicy, ResampleScheme};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Components {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Components {
    fn to_state(&self) -> Result<StateVector, Error> {
        match self {
            Components::Scalar(x) => StateVector::new(vec![*x]),
            Components::Vector(v) => StateVector::new(v.clone()),
        }
    }
}

fn default_model() -> ModelConfig {
    ModelConfig::Rw1d { q: 1.0, r: 4.0 }
}

fn default_predicted_tolerance() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldenFixture {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "default_model")]
    pub model: ModelConfig,
    pub initial_particles: Vec<Components>,
    pub noises: Vec<Components>,
    pub z: Components,
    pub expected_predicted: Vec<Components>,
    pub expected_weights: Vec<f64>,
    pub tolerance: f64,
    #[serde(default = "default_predicted_tolerance")]
    pub predicted_tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_likelihood_factors: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub likelihood_tolerance: Option<f64>,
}

/// The fixture could not be read, parsed or replayed.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureError(pub String);

impl fmt::Display for FixtureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for FixtureError {}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub label: String,
    pub expected: f64,
    pub actual: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        (self.actual - self.expected).abs() <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GoldenReport {
    pub checks: Vec<Check>,
}

impl GoldenReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

impl GoldenFixture {
    pub fn from_json(text: &str) -> Result<Self, FixtureError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| FixtureError(format!("{}: {}", e.path(), e.inner())))
    }

    pub fn load(path: &Path) -> Result<Self, FixtureError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FixtureError(format!("cannot read fixture {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Runs the step through the injected-noise seam (no resampling) and
    /// compares predicted particles, likelihood factors and weights.
    pub fn replay(&self) -> Result<GoldenReport, FixtureError> {
        let bad = |what: &str, e: Error| FixtureError(format!("{what}: {e}"));
        let model = self.model.build().map_err(|e| FixtureError(e.to_string()))?;
        let states = |v: &[Components], what: &str| -> Result<Vec<StateVector>, FixtureError> {
            v.iter().map(|c| c.to_state().map_err(|e| bad(what, e))).collect()
        };
        let initial = states(&self.initial_particles, "initial_particles")?;
        let noises = states(&self.noises, "noises")?;
        let expected_predicted = states(&self.expected_predicted, "expected_predicted")?;
        let z = self.z.to_state().map_err(|e| bad("z", e))?;
        let n = initial.len();
        for (what, len) in [
            ("expected_predicted", expected_predicted.len()),
            ("expected_weights", self.expected_weights.len()),
        ] {
            if len != n {
                return Err(FixtureError(format!("{what}: expected {n} entries, got {len}")));
            }
        }
        if let Some(f) = &self.expected_likelihood_factors {
            if f.len() != n {
                return Err(FixtureError(format!(
                    "expected_likelihood_factors: expected {n} entries, got {}",
                    f.len()
                )));
            }
        }

        let set = ParticleSet::uniform(initial).map_err(|e| bad("initial_particles", e))?;
        let mut pf = ParticleFilter::from_set(
            model.clone(),
            set,
            ResamplePolicy::disabled(ResampleScheme::Systematic),
            Estimator::Mean,
            RngStream::new(0),
        )
        .map_err(|e| bad("initial_particles", e))?;
        pf.step_with_injected_noise(&z, &noises, None)
            .map_err(|e| bad("step", e))?;

        let mut report = GoldenReport::default();
        let predicted = pf.set().particles();
        for (i, (got, want)) in predicted.iter().zip(&expected_predicted).enumerate() {
            if got.dim() != want.dim() {
                return Err(FixtureError(format!(
                    "expected_predicted[{i}]: expected {} components, got {}",
                    got.dim(),
                    want.dim()
                )));
            }
            for (j, (g, w)) in got.iter().zip(want.iter()).enumerate() {
                report.checks.push(Check {
                    label: format!("predicted[{i}][{j}]"),
                    expected: *w,
                    actual: *g,
                    tolerance: self.predicted_tolerance,
                });
            }
        }

        if let Some(factors) = &self.expected_likelihood_factors {
            let tolerance = self.likelihood_tolerance.unwrap_or(self.tolerance);
            let log_norm: f64 = model
                .measurement_variances()
                .iter()
                .map(|r| 0.5 * (2.0 * PI * r).ln())
                .sum();
            for (i, (x, want)) in predicted.iter().zip(factors).enumerate() {
                let ll = model.log_likelihood(&z, x).map_err(|e| bad("likelihood", e))?;
                report.checks.push(Check {
                    label: format!("likelihood_factor[{i}]"),
                    expected: *want,
                    actual: (ll + log_norm).exp(),
                    tolerance,
                });
            }
        }

        for (i, (got, want)) in pf.set().weights().iter().zip(&self.expected_weights).enumerate() {
            report.checks.push(Check {
                label: format!("weight[{i}]"),
                expected: *want,
                actual: *got,
                tolerance: self.tolerance,
            });
        }
        Ok(report)
    }
}
