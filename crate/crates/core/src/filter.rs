//! The bootstrap SIR recursion.
//!
//! Each [`ParticleFilter::step`] runs, in order:
//!
//! 1. prediction: every particle is pushed through the motion model with a
//!    fresh process-noise draw (particle-index order, one full noise vector
//!    per particle);
//! 2. weighting: `ln w_i += ln p(z | x_i)`; the previous weight is always kept,
//!    even when it is uniform after a resample;
//! 3. normalization (max-shifted log-sum-exp);
//! 4. effective sample size;
//! 5. adaptive resampling, resetting weights to `1/N` when it fires;
//! 6. the point estimate, taken after any resampling.
//!
//! If every log-weight collapses to `-inf` the step resets to uniform weights
//! and flags the outcome as degenerate instead of failing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::StateSpaceModel;
use crate::particle::{ObservationVector, ParticleSet, StateVector};
use crate::resampling::{effective_sample_size, should_resample, systematic_resample, ResamplePolicy};
use crate::rng::RngStream;

/// Point estimate extracted from the weighted set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Weighted mean `Σ w_i x_i`.
    #[default]
    Mean,
    /// Highest-weight particle (lowest index on ties).
    Map,
}

impl Estimator {
    pub fn apply(&self, set: &ParticleSet) -> StateVector {
        match self {
            Estimator::Mean => set.weighted_mean(),
            Estimator::Map => set.map_estimate(),
        }
    }
}

/// Independent Gaussian prior per component.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrior {
    mean: StateVector,
    std: Vec<f64>,
}

impl GaussianPrior {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        let mean = StateVector::new(mean).map_err(|e| Error::InvalidPrior(format!("mean: {e}")))?;
        if std.len() != mean.dim() {
            return Err(Error::InvalidPrior(format!(
                "{} standard deviations for a {}-dimensional mean",
                std.len(),
                mean.dim()
            )));
        }
        if let Some(s) = std.iter().find(|s| !s.is_finite() || **s < 0.0) {
            return Err(Error::InvalidPrior(format!("standard deviation {s} must be finite and >= 0")));
        }
        Ok(GaussianPrior { mean, std })
    }

    pub fn mean(&self) -> &StateVector {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn dim(&self) -> usize {
        self.mean.dim()
    }

    /// One draw, component order.
    pub fn sample(&self, rng: &mut RngStream) -> StateVector {
        let x = self
            .mean
            .iter()
            .zip(&self.std)
            .map(|(m, s)| m + s * rng.standard_normal())
            .collect();
        StateVector::from_raw(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub estimate: StateVector,
    /// Effective sample size of the normalized weights, before any resampling.
    pub ess: f64,
    pub resampled: bool,
    /// All weights collapsed and were reset to uniform.
    pub degenerate: bool,
}

enum NoiseSource<'a> {
    Stream,
    Injected(&'a [StateVector]),
}

enum ResampleSource {
    Stream,
    Offset(f64),
    Skip,
}

#[derive(Debug, Clone)]
pub struct ParticleFilter<M> {
    model: M,
    set: ParticleSet,
    policy: ResamplePolicy,
    estimator: Estimator,
    rng: RngStream,
    last_ess: f64,
    last_resampled: bool,
}

impl<M: StateSpaceModel> ParticleFilter<M> {
    /// Draws `n_particles` from the prior (particle order, then component
    /// order) and gives each weight `1/N`.
    pub fn init(
        model: M,
        prior: &GaussianPrior,
        n_particles: usize,
        policy: ResamplePolicy,
        estimator: Estimator,
        mut rng: RngStream,
    ) -> Result<Self> {
        if n_particles == 0 {
            return Err(Error::param("n_particles", "must be at least 1"));
        }
        if prior.dim() != model.state_dim() {
            return Err(Error::InvalidPrior(format!(
                "prior has dimension {}, model state has {}",
                prior.dim(),
                model.state_dim()
            )));
        }
        let particles = (0..n_particles).map(|_| prior.sample(&mut rng)).collect();
        let set = ParticleSet::uniform(particles)?;
        Ok(Self::assemble(model, set, policy, estimator, rng))
    }

    /// Starts from an existing set; its weights are normalized on entry.
    pub fn from_set(
        model: M,
        mut set: ParticleSet,
        policy: ResamplePolicy,
        estimator: Estimator,
        rng: RngStream,
    ) -> Result<Self> {
        if set.dim() != model.state_dim() {
            return Err(Error::dims("particle set", model.state_dim(), set.dim()));
        }
        set.normalize()?;
        Ok(Self::assemble(model, set, policy, estimator, rng))
    }

    fn assemble(model: M, set: ParticleSet, policy: ResamplePolicy, estimator: Estimator, rng: RngStream) -> Self {
        let last_ess = effective_sample_size(&set.weights()).unwrap_or(1.0);
        ParticleFilter {
            model,
            set,
            policy,
            estimator,
            rng,
            last_ess,
            last_resampled: false,
        }
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn set(&self) -> &ParticleSet {
        &self.set
    }

    pub fn policy(&self) -> &ResamplePolicy {
        &self.policy
    }

    pub fn estimator(&self) -> Estimator {
        self.estimator
    }

    /// The filter's stream. Simulations draw ground-truth noise from it so a
    /// whole experiment hangs off one seed.
    pub fn rng_mut(&mut self) -> &mut RngStream {
        &mut self.rng
    }

    /// ESS reported by the last step (before its resampling).
    pub fn last_ess(&self) -> f64 {
        self.last_ess
    }

    pub fn last_resampled(&self) -> bool {
        self.last_resampled
    }

    /// ESS of the weights the set carries right now.
    pub fn current_ess(&self) -> f64 {
        effective_sample_size(&self.set.weights()).unwrap_or(1.0)
    }

    pub fn estimate(&self) -> StateVector {
        self.estimator.apply(&self.set)
    }

    /// One full recursion step with noise and resampling offsets from the stream.
    pub fn step(&mut self, z: &ObservationVector, u: Option<&[f64]>) -> Result<StepOutcome> {
        self.advance(z, u, NoiseSource::Stream, ResampleSource::Stream)
    }

    /// Same as [`step`](Self::step) but with caller-supplied process noise,
    /// one vector per particle. `resample_u` is the systematic-resampling
    /// offset used if the policy fires; `None` skips resampling altogether.
    /// The stream is not touched.
    pub fn step_with_injected_noise(
        &mut self,
        z: &ObservationVector,
        noises: &[StateVector],
        resample_u: Option<f64>,
    ) -> Result<StepOutcome> {
        if noises.len() != self.set.len() {
            return Err(Error::dims("injected noises", self.set.len(), noises.len()));
        }
        if let Some(e) = noises.iter().find(|e| e.dim() != self.model.state_dim()) {
            return Err(Error::dims("injected noise", self.model.state_dim(), e.dim()));
        }
        let resample = match resample_u {
            Some(u) if (0.0..1.0).contains(&u) => ResampleSource::Offset(u),
            Some(u) => return Err(Error::param("resample_u", format!("must lie in [0, 1), got {u}"))),
            None => ResampleSource::Skip,
        };
        self.advance(z, None, NoiseSource::Injected(noises), resample)
    }

    fn advance(
        &mut self,
        z: &ObservationVector,
        u: Option<&[f64]>,
        noise: NoiseSource<'_>,
        resample: ResampleSource,
    ) -> Result<StepOutcome> {
        let o = self.model.observation_dim();
        if z.dim() != o {
            return Err(Error::dims("observation", o, z.dim()));
        }

        let mut predicted = Vec::with_capacity(self.set.len());
        for (i, x) in self.set.particles().iter().enumerate() {
            let eta = match noise {
                NoiseSource::Stream => self.model.sample_process_noise(&mut self.rng),
                NoiseSource::Injected(noises) => noises[i].clone(),
            };
            predicted.push(self.model.propagate(x, u, &eta)?);
        }

        let mut log_weights = self.set.log_weights().to_vec();
        for (lw, x) in log_weights.iter_mut().zip(&predicted) {
            *lw += self.model.log_likelihood(z, x)?;
        }
        let mut set = ParticleSet::new(predicted, log_weights, self.set.generation() + 1)?;

        let (weights, degenerate) = match set.normalize() {
            Ok(w) => (w, false),
            Err(Error::AllWeightsCollapsed) => {
                set.reset_uniform();
                (set.weights(), true)
            }
            Err(e) => return Err(e),
        };

        let ess = effective_sample_size(&weights)?;
        let mut resampled = false;
        if should_resample(&self.policy, ess, set.len()) {
            let indices = match resample {
                ResampleSource::Stream => Some(self.policy.resample(&weights, &mut self.rng)),
                ResampleSource::Offset(u) => Some(systematic_resample(&weights, u)),
                ResampleSource::Skip => None,
            };
            if let Some(indices) = indices {
                set.resample_from(&indices);
                resampled = true;
            }
        }

        self.set = set;
        self.last_ess = ess;
        self.last_resampled = resampled;
        Ok(StepOutcome {
            estimate: self.estimate(),
            ess,
            resampled,
            degenerate,
        })
    }
}
