//! Weighted particle sets and the arithmetic on them.
//!
//! A [`ParticleSet`] is the empirical posterior: `N` state hypotheses with
//! aligned weights. Weights live in the log domain and are only exponentiated
//! after a max-shift, so long runs of small likelihoods never underflow to an
//! all-zero vector before normalization.

use std::ops::Index;

use crate::error::{Error, Result};

/// A real-valued state (or observation) vector of fixed dimension `n >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<f64>);

/// Observations share the representation of states.
pub type ObservationVector = StateVector;

impl StateVector {
    /// Builds a vector, rejecting empty input and non-finite components.
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Empty("state vector"));
        }
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("state vector"));
        }
        Ok(StateVector(components))
    }

    /// One-dimensional vector. Panics on a non-finite value.
    pub fn scalar(value: f64) -> Self {
        assert!(value.is_finite(), "non-finite scalar state {value}");
        StateVector(vec![value])
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "state dimension must be at least 1");
        StateVector(vec![0.0; dim])
    }

    /// Wraps components produced by arithmetic on already validated vectors.
    pub(crate) fn from_raw(components: Vec<f64>) -> Self {
        debug_assert!(!components.is_empty());
        StateVector(components)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Squared Euclidean distance to `other`.
    pub fn distance_squared(&self, other: &StateVector) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::dims("distance", self.dim(), other.dim()));
        }
        Ok(self
            .iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }
}

impl Index<usize> for StateVector {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

impl AsRef<[f64]> for StateVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Weighted particle approximation of a posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    particles: Vec<StateVector>,
    log_weights: Vec<f64>,
    generation: usize,
}

impl ParticleSet {
    /// Builds a set from particles and (not necessarily normalized) log-weights.
    pub fn new(particles: Vec<StateVector>, log_weights: Vec<f64>, generation: usize) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::Empty("particle set"));
        }
        if particles.len() != log_weights.len() {
            return Err(Error::dims("log-weights", particles.len(), log_weights.len()));
        }
        let dim = particles[0].dim();
        if let Some(p) = particles.iter().find(|p| p.dim() != dim) {
            return Err(Error::dims("particle", dim, p.dim()));
        }
        Ok(ParticleSet {
            particles,
            log_weights,
            generation,
        })
    }

    /// Equally weighted set (`w = 1/N`) at generation 0.
    pub fn uniform(particles: Vec<StateVector>) -> Result<Self> {
        let n = particles.len();
        let lw = -(n.max(1) as f64).ln();
        Self::new(particles, vec![lw; n], 0)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.particles[0].dim()
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn particles(&self) -> &[StateVector] {
        &self.particles
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Linear weights, `exp(log_weight)`.
    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|lw| lw.exp()).collect()
    }

    /// Resets every weight to `1/N`.
    pub fn reset_uniform(&mut self) {
        let lw = -(self.len() as f64).ln();
        self.log_weights.iter_mut().for_each(|w| *w = lw);
    }

    /// Normalizes in place and returns the linear weights.
    pub fn normalize(&mut self) -> Result<Vec<f64>> {
        let weights = normalize_weights(&self.log_weights)?;
        for (lw, w) in self.log_weights.iter_mut().zip(&weights) {
            *lw = w.ln();
        }
        Ok(weights)
    }

    /// Replaces the particles with the ones selected by `indices` and resets
    /// the weights to `1/N`.
    pub fn resample_from(&mut self, indices: &[usize]) {
        debug_assert_eq!(indices.len(), self.len());
        let next: Vec<StateVector> = indices.iter().map(|&i| self.particles[i].clone()).collect();
        self.particles = next;
        self.reset_uniform();
    }

    pub fn weighted_mean(&self) -> StateVector {
        weighted_mean(&self.particles, &self.weights())
    }

    pub fn map_estimate(&self) -> StateVector {
        self.particles[argmax(&self.log_weights)].clone()
    }
}

/// `ln Σ exp(x_i)` computed with a max-shift. Returns `-inf` when every entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Turns log-weights into linear weights that sum to one.
///
/// The maximum log-weight is subtracted before exponentiating, so the largest
/// entry maps to `exp(0) = 1` and the sum is always at least one.
pub fn normalize_weights(log_weights: &[f64]) -> Result<Vec<f64>> {
    if log_weights.is_empty() {
        return Err(Error::Empty("log-weights"));
    }
    if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
        return Err(Error::NonFinite("log-weights"));
    }
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::AllWeightsCollapsed);
    }
    let mut out: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|w| *w /= total);
    Ok(out)
}

/// Componentwise `Σ w_i x_i`.
///
/// Accumulated as `x_0 + Σ w_i (x_i - x_0)`, which is exact when every
/// particle coincides.
pub fn weighted_mean(particles: &[StateVector], weights: &[f64]) -> StateVector {
    assert_eq!(particles.len(), weights.len(), "particles and weights must align");
    let reference = &particles[0];
    let mut offset = vec![0.0; reference.dim()];
    for (p, &w) in particles.iter().zip(weights) {
        for ((a, x), r) in offset.iter_mut().zip(p.iter()).zip(reference.iter()) {
            *a += w * (x - r);
        }
    }
    let mean = reference.iter().zip(offset).map(|(r, d)| r + d).collect();
    StateVector::from_raw(mean)
}

/// The particle carrying the largest weight; ties go to the lowest index.
pub fn map_estimate(particles: &[StateVector], weights: &[f64]) -> StateVector {
    assert_eq!(particles.len(), weights.len(), "particles and weights must align");
    particles[argmax(weights)].clone()
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Plain Monte Carlo estimate `(1/N) Σ g(x_i)`.
pub fn monte_carlo_expectation<F>(g: F, samples: &[StateVector]) -> Result<f64>
where
    F: Fn(&StateVector) -> f64,
{
    if samples.is_empty() {
        return Err(Error::Empty("samples"));
    }
    Ok(samples.iter().map(g).sum::<f64>() / samples.len() as f64)
}
