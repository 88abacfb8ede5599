//! State-space model contracts and the built-in models.
//!
//! A model pairs a motion contract `x_k = f(x_{k-1}, u_k) + η_k` with a
//! measurement contract `z_k = h(x_k) + v_k`. Both noises are zero-mean
//! Gaussian with diagonal covariances `Q` (process) and `R` (measurement).
//!
//! Process noise is never drawn inside [`MotionModel::propagate`]; callers
//! draw it with [`MotionModel::sample_process_noise`] (or inject it), which
//! keeps the draw order explicit.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::particle::{ObservationVector, StateVector};
use crate::rng::RngStream;

/// Dimension of the hidden state, shared by both halves of a model.
pub trait StateDim {
    fn state_dim(&self) -> usize;
}

pub trait MotionModel: StateDim {
    /// Length of the control vector; 0 when the model takes no control.
    fn control_dim(&self) -> usize {
        0
    }

    /// Diagonal of `Q`, one entry per state component.
    fn process_variances(&self) -> &[f64];

    /// Deterministic part `f(x, u)`. Dimensions are already checked.
    fn transition(&self, x: &StateVector, u: Option<&[f64]>) -> StateVector;

    /// `f(x, u) + noise`.
    fn propagate(&self, x: &StateVector, u: Option<&[f64]>, noise: &StateVector) -> Result<StateVector> {
        let n = self.state_dim();
        if x.dim() != n {
            return Err(Error::dims("propagate state", n, x.dim()));
        }
        if noise.dim() != n {
            return Err(Error::dims("process noise", n, noise.dim()));
        }
        check_control(self.control_dim(), u)?;
        let mut next = self.transition(x, u).into_inner();
        for (c, e) in next.iter_mut().zip(noise.iter()) {
            *c += e;
        }
        Ok(StateVector::from_raw(next))
    }

    /// Draws `η ~ N(0, diag(Q))`: one standard normal per component, in
    /// component order, scaled by `sqrt(Q_j)`.
    fn sample_process_noise(&self, rng: &mut RngStream) -> StateVector {
        let noise = self
            .process_variances()
            .iter()
            .map(|q| q.sqrt() * rng.standard_normal())
            .collect();
        StateVector::from_raw(noise)
    }
}

pub trait MeasurementModel: StateDim {
    fn observation_dim(&self) -> usize;

    /// Diagonal of `R`, one entry per observation component.
    fn measurement_variances(&self) -> &[f64];

    /// Noise-free observation `h(x)`. Dimensions are already checked.
    fn observe(&self, x: &StateVector) -> ObservationVector;

    fn predict_measurement(&self, x: &StateVector) -> Result<ObservationVector> {
        if x.dim() != self.state_dim() {
            return Err(Error::dims("measurement state", self.state_dim(), x.dim()));
        }
        Ok(self.observe(x))
    }

    /// `ln N(z; h(x), diag(R))`, normalizing constant included.
    ///
    /// A zero variance is treated as the point-mass limit: the component
    /// contributes 0 when the residual is exactly zero and `-inf` otherwise.
    fn log_likelihood(&self, z: &ObservationVector, x: &StateVector) -> Result<f64> {
        let o = self.observation_dim();
        if z.dim() != o {
            return Err(Error::dims("observation", o, z.dim()));
        }
        let predicted = self.predict_measurement(x)?;
        Ok(diagonal_gaussian_log_density(
            z.as_slice(),
            predicted.as_slice(),
            self.measurement_variances(),
        ))
    }

    /// Draws `v ~ N(0, diag(R))`, one standard normal per component.
    fn sample_measurement_noise(&self, rng: &mut RngStream) -> ObservationVector {
        let noise = self
            .measurement_variances()
            .iter()
            .map(|r| r.sqrt() * rng.standard_normal())
            .collect();
        StateVector::from_raw(noise)
    }
}

/// A complete model: motion and measurement halves over the same state.
pub trait StateSpaceModel: MotionModel + MeasurementModel {}

impl<T: MotionModel + MeasurementModel> StateSpaceModel for T {}

fn check_control(expected: usize, u: Option<&[f64]>) -> Result<()> {
    match u {
        None if expected == 0 => Ok(()),
        None => Err(Error::dims("control", expected, 0)),
        Some(u) if u.len() == expected => Ok(()),
        Some(u) => Err(Error::dims("control", expected, u.len())),
    }
}

pub(crate) fn diagonal_gaussian_log_density(z: &[f64], mean: &[f64], variances: &[f64]) -> f64 {
    z.iter()
        .zip(mean)
        .zip(variances)
        .map(|((z, m), &var)| {
            let e = z - m;
            if var > 0.0 {
                -0.5 * ((2.0 * PI * var).ln() + e * e / var)
            } else if e == 0.0 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        })
        .sum()
}

fn check_variance(name: &'static str, v: f64, allow_zero: bool) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::param(name, "must be finite"));
    }
    if v < 0.0 || (!allow_zero && v == 0.0) {
        return Err(Error::param(name, format!("must be non-negative, got {v}")));
    }
    Ok(())
}

/// Scalar random walk observed directly: `x_k = x_{k-1} + η_k`, `z_k = x_k + v_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomWalk1D {
    q: [f64; 1],
    r: [f64; 1],
}

impl RandomWalk1D {
    /// `q`: process-noise variance, `r`: measurement-noise variance.
    pub fn new(q: f64, r: f64) -> Result<Self> {
        check_variance("q", q, true)?;
        check_variance("r", r, true)?;
        Ok(RandomWalk1D { q: [q], r: [r] })
    }

    pub fn q(&self) -> f64 {
        self.q[0]
    }

    pub fn r(&self) -> f64 {
        self.r[0]
    }
}

impl StateDim for RandomWalk1D {
    fn state_dim(&self) -> usize {
        1
    }
}

impl MotionModel for RandomWalk1D {
    fn process_variances(&self) -> &[f64] {
        &self.q
    }

    fn transition(&self, x: &StateVector, _u: Option<&[f64]>) -> StateVector {
        x.clone()
    }
}

impl MeasurementModel for RandomWalk1D {
    fn observation_dim(&self) -> usize {
        1
    }

    fn measurement_variances(&self) -> &[f64] {
        &self.r
    }

    fn observe(&self, x: &StateVector) -> ObservationVector {
        x.clone()
    }
}

/// Planar constant-velocity model over `[p_x, p_y, v_x, v_y]`, observing position.
///
/// The transition is
///
/// ```text
/// | 1 0 dt 0  |
/// | 0 1 0  dt |
/// | 0 0 1  0  |
/// | 0 0 0  1  |
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantVelocity2D {
    dt: f64,
    q: [f64; 4],
    r: [f64; 2],
}

impl ConstantVelocity2D {
    pub fn new(dt: f64, q_pos: f64, q_vel: f64, r_meas: f64) -> Result<Self> {
        if !dt.is_finite() || dt < 0.0 {
            return Err(Error::param("dt", format!("must be finite and >= 0, got {dt}")));
        }
        check_variance("q_pos", q_pos, true)?;
        check_variance("q_vel", q_vel, true)?;
        check_variance("r_meas", r_meas, true)?;
        Ok(ConstantVelocity2D {
            dt,
            q: [q_pos, q_pos, q_vel, q_vel],
            r: [r_meas, r_meas],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn q_pos(&self) -> f64 {
        self.q[0]
    }

    pub fn q_vel(&self) -> f64 {
        self.q[2]
    }

    pub fn r_meas(&self) -> f64 {
        self.r[0]
    }
}

impl StateDim for ConstantVelocity2D {
    fn state_dim(&self) -> usize {
        4
    }
}

impl MotionModel for ConstantVelocity2D {
    fn process_variances(&self) -> &[f64] {
        &self.q
    }

    fn transition(&self, x: &StateVector, _u: Option<&[f64]>) -> StateVector {
        StateVector::from_raw(vec![
            x[0] + self.dt * x[2],
            x[1] + self.dt * x[3],
            x[2],
            x[3],
        ])
    }
}

impl MeasurementModel for ConstantVelocity2D {
    fn observation_dim(&self) -> usize {
        2
    }

    fn measurement_variances(&self) -> &[f64] {
        &self.r
    }

    fn observe(&self, x: &StateVector) -> ObservationVector {
        StateVector::from_raw(vec![x[0], x[1]])
    }
}

/// Either built-in model, for runs whose model is picked at runtime.
#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinModel {
    RandomWalk1D(RandomWalk1D),
    ConstantVelocity2D(ConstantVelocity2D),
}

impl BuiltinModel {
    /// Component names used for trace columns: state names, then observation names.
    pub fn component_names(&self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            BuiltinModel::RandomWalk1D(_) => (&["x"], &["x"]),
            BuiltinModel::ConstantVelocity2D(_) => (&["px", "py", "vx", "vy"], &["px", "py"]),
        }
    }
}

impl From<RandomWalk1D> for BuiltinModel {
    fn from(m: RandomWalk1D) -> Self {
        BuiltinModel::RandomWalk1D(m)
    }
}

impl From<ConstantVelocity2D> for BuiltinModel {
    fn from(m: ConstantVelocity2D) -> Self {
        BuiltinModel::ConstantVelocity2D(m)
    }
}

impl StateDim for BuiltinModel {
    fn state_dim(&self) -> usize {
        match self {
            BuiltinModel::RandomWalk1D(m) => m.state_dim(),
            BuiltinModel::ConstantVelocity2D(m) => m.state_dim(),
        }
    }
}

impl MotionModel for BuiltinModel {
    fn process_variances(&self) -> &[f64] {
        match self {
            BuiltinModel::RandomWalk1D(m) => m.process_variances(),
            BuiltinModel::ConstantVelocity2D(m) => m.process_variances(),
        }
    }

    fn transition(&self, x: &StateVector, u: Option<&[f64]>) -> StateVector {
        match self {
            BuiltinModel::RandomWalk1D(m) => m.transition(x, u),
            BuiltinModel::ConstantVelocity2D(m) => m.transition(x, u),
        }
    }
}

impl MeasurementModel for BuiltinModel {
    fn observation_dim(&self) -> usize {
        match self {
            BuiltinModel::RandomWalk1D(m) => m.observation_dim(),
            BuiltinModel::ConstantVelocity2D(m) => m.observation_dim(),
        }
    }

    fn measurement_variances(&self) -> &[f64] {
        match self {
            BuiltinModel::RandomWalk1D(m) => m.measurement_variances(),
            BuiltinModel::ConstantVelocity2D(m) => m.measurement_variances(),
        }
    }

    fn observe(&self, x: &StateVector) -> ObservationVector {
        match self {
            BuiltinModel::RandomWalk1D(m) => m.observe(x),
            BuiltinModel::ConstantVelocity2D(m) => m.observe(x),
        }
    }
}
