//! Degeneracy diagnostics and resampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Tolerance on `Σw = 1` accepted by [`effective_sample_size`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResampleScheme {
    Systematic,
    Multinomial,
}

/// When and how to resample: resample iff `N_eff < threshold_fraction * N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResamplePolicy {
    scheme: ResampleScheme,
    threshold_fraction: f64,
}

impl Default for ResamplePolicy {
    /// Systematic resampling below `N/2`.
    fn default() -> Self {
        ResamplePolicy {
            scheme: ResampleScheme::Systematic,
            threshold_fraction: 0.5,
        }
    }
}

impl ResamplePolicy {
    pub fn new(scheme: ResampleScheme, threshold_fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold_fraction) {
            return Err(Error::param(
                "threshold_fraction",
                format!("must lie in [0, 1], got {threshold_fraction}"),
            ));
        }
        Ok(ResamplePolicy {
            scheme,
            threshold_fraction,
        })
    }

    /// Never resample.
    pub fn disabled(scheme: ResampleScheme) -> Self {
        ResamplePolicy {
            scheme,
            threshold_fraction: 0.0,
        }
    }

    pub fn scheme(&self) -> ResampleScheme {
        self.scheme
    }

    pub fn threshold_fraction(&self) -> f64 {
        self.threshold_fraction
    }

    /// Draws the resampling randomness this policy's scheme needs from `rng`
    /// (one uniform for systematic, `N` uniforms for multinomial).
    pub fn resample(&self, weights: &[f64], rng: &mut RngStream) -> Vec<usize> {
        match self.scheme {
            ResampleScheme::Systematic => systematic_resample(weights, rng.uniform()),
            ResampleScheme::Multinomial => multinomial_resample(weights, rng),
        }
    }
}

/// `N_eff = 1 / Σ w_i²`, clamped to `[1, N]`.
pub fn effective_sample_size(weights: &[f64]) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::Empty("weights"));
    }
    let sum: f64 = weights.iter().sum();
    if !((sum - 1.0).abs() <= NORMALIZATION_TOLERANCE) {
        return Err(Error::NotNormalized { sum });
    }
    let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
    Ok((1.0 / sum_sq).clamp(1.0, weights.len() as f64))
}

pub fn should_resample(policy: &ResamplePolicy, n_eff: f64, n: usize) -> bool {
    n_eff < policy.threshold_fraction * n as f64
}

/// Cumulative weights with every entry from the last positive weight onward
/// pinned to exactly 1, so a walk never runs past the end on rounding shortfall.
fn pinned_cumsum(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cumsum: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    let last_positive = weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1);
    cumsum[last_positive..].iter_mut().for_each(|c| *c = 1.0);
    cumsum
}

/// Systematic resampling with a single offset `u ∈ [0, 1)`.
///
/// Positions `(i + u) / N` are walked against the cumulative weights; position
/// `i` selects the first `j` with `position < cumsum[j]`. The output is
/// non-decreasing.
pub fn systematic_resample(weights: &[f64], u: f64) -> Vec<usize> {
    let n = weights.len();
    let cumsum = pinned_cumsum(weights);
    let mut indices = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        // Keep each position strictly inside its stratum [i/N, (i+1)/N); for u
        // within an ulp of 1, `i + u` would otherwise round up to `i + 1`.
        let upper = (i + 1) as f64 / n as f64;
        let position = ((i as f64 + u) / n as f64).min(upper.next_down());
        while j < n - 1 && position >= cumsum[j] {
            j += 1;
        }
        indices.push(j);
    }
    indices
}

/// Multinomial resampling: `N` independent inverse-CDF draws, sorted ascending.
pub fn multinomial_resample(weights: &[f64], rng: &mut RngStream) -> Vec<usize> {
    let draws: Vec<f64> = (0..weights.len()).map(|_| rng.uniform()).collect();
    multinomial_resample_with_draws(weights, &draws)
}

/// [`multinomial_resample`] with the uniform draws supplied by the caller.
pub fn multinomial_resample_with_draws(weights: &[f64], draws: &[f64]) -> Vec<usize> {
    let n = weights.len();
    let cumsum = pinned_cumsum(weights);
    let mut indices: Vec<usize> = draws
        .iter()
        .map(|&u| cumsum.partition_point(|&c| c <= u).min(n - 1))
        .collect();
    indices.sort_unstable();
    indices
}

/// How many times each index was selected.
pub fn selection_counts(indices: &[usize], n: usize) -> Vec<usize> {
    let mut counts = vec![0; n];
    for &i in indices {
        counts[i] += 1;
    }
    counts
}
