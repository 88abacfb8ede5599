//! Bootstrap (sequential importance resampling) particle filter.
//!
//! The crate is organised bottom-up:
//!
//! - [`particle`]: state vectors, weighted particle sets, log-domain weight
//!   normalization and point estimators.
//! - [`rng`]: the seeded random stream every stochastic operation draws from.
//! - [`models`]: motion / measurement contracts and the two built-in models
//!   (scalar random walk, planar constant velocity).
//! - [`resampling`]: effective sample size, systematic and multinomial
//!   resampling, and the adaptive resampling rule.
//! - [`filter`]: the predict, weight, normalize, resample, estimate recursion.
//! - [`sim`]: ground truth / measurement generation and scenario runs.
//! - [`config`], [`trace`], [`golden`], [`cli`]: the command-line front end.
//!
//! ```
//! use smc::filter::{Estimator, GaussianPrior, ParticleFilter};
//! use smc::models::RandomWalk1D;
//! use smc::resampling::ResamplePolicy;
//! use smc::rng::RngStream;
//! use smc::StateVector;
//!
//! let model = RandomWalk1D::new(1.0, 4.0).unwrap();
//! let prior = GaussianPrior::new(vec![0.0], vec![2.0]).unwrap();
//! let mut pf = ParticleFilter::init(
//!     model,
//!     &prior,
//!     200,
//!     ResamplePolicy::default(),
//!     Estimator::Mean,
//!     RngStream::new(7),
//! )
//! .unwrap();
//! let outcome = pf.step(&StateVector::scalar(3.2), None).unwrap();
//! assert!(outcome.ess >= 1.0 && outcome.ess <= 200.0);
//! ```

pub mod cli;
pub mod config;
pub mod error;
pub mod filter;
pub mod golden;
pub mod models;
pub mod particle;
pub mod resampling;
pub mod rng;
pub mod sim;
pub mod trace;

pub use error::{Error, Result};
pub use particle::{ObservationVector, ParticleSet, StateVector};
