//! Ground truth, measurements and end-to-end scenario runs.
//!
//! A run owns a single [`RngStream`]. Draw order is fixed:
//!
//! 1. initial particles from the prior (particle order, component order);
//! 2. for each step `k = 1..T`: truth process noise, measurement noise, the
//!    `N` particle process noises, then the resampling draws if the policy
//!    fires.
//!
//! Step `k = 0` carries no measurement; its estimate is the prior's weighted
//! mean.

use crate::error::{Error, Result};
use crate::filter::{Estimator, GaussianPrior, ParticleFilter};
use crate::models::{BuiltinModel, ConstantVelocity2D, MeasurementModel, MotionModel, RandomWalk1D, StateDim};
use crate::particle::{ObservationVector, StateVector};
use crate::resampling::{ResamplePolicy, ResampleScheme};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub model: BuiltinModel,
    /// Number of trace rows `T`, including `k = 0`.
    pub horizon: usize,
    pub prior: GaussianPrior,
    pub initial_truth: StateVector,
    pub n_particles: usize,
    pub policy: ResamplePolicy,
    pub estimator: Estimator,
    /// Steps whose particle cloud is copied into the trace.
    pub dump_steps: Vec<usize>,
}

impl Scenario {
    /// Scalar random walk: `Q = 1`, `R = 4`, `T = 15`, `N = 200`, prior
    /// `N(0, 2²)`, systematic resampling below `N/2`.
    pub fn demo_1d() -> Self {
        Scenario {
            name: "demo-1d".into(),
            model: RandomWalk1D::new(1.0, 4.0).expect("valid preset").into(),
            horizon: 15,
            prior: GaussianPrior::new(vec![0.0], vec![2.0]).expect("valid preset"),
            initial_truth: StateVector::scalar(0.0),
            n_particles: 200,
            policy: ResamplePolicy::default(),
            estimator: Estimator::Mean,
            dump_steps: Vec::new(),
        }
    }

    /// Planar constant velocity: `T = 30`, `dt = 1`, `Q_pos = 0.2`,
    /// `Q_vel = 0.05`, `R = 2`, `N = 500`, truth starting at `[0, 0, 1, 0.5]`,
    /// every prior component `N(0, 2²)`.
    pub fn demo_2d() -> Self {
        Scenario {
            name: "demo-2d".into(),
            model: ConstantVelocity2D::new(1.0, 0.2, 0.05, 2.0).expect("valid preset").into(),
            horizon: 30,
            prior: GaussianPrior::new(vec![0.0; 4], vec![2.0; 4]).expect("valid preset"),
            initial_truth: StateVector::new(vec![0.0, 0.0, 1.0, 0.5]).expect("valid preset"),
            n_particles: 500,
            policy: ResamplePolicy::new(ResampleScheme::Systematic, 0.5).expect("valid preset"),
            estimator: Estimator::Mean,
            dump_steps: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::param("horizon", "must be at least 1"));
        }
        if self.n_particles == 0 {
            return Err(Error::param("n_particles", "must be at least 1"));
        }
        let n = self.model.state_dim();
        if self.prior.dim() != n {
            return Err(Error::dims("prior", n, self.prior.dim()));
        }
        if self.initial_truth.dim() != n {
            return Err(Error::dims("initial_truth", n, self.initial_truth.dim()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub truth: StateVector,
    /// `None` at `k = 0`.
    pub measurement: Option<ObservationVector>,
    pub estimate: StateVector,
    pub ess: f64,
    pub resampled: bool,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSnapshot {
    pub k: usize,
    pub particles: Vec<StateVector>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<StepRecord>,
    pub snapshots: Vec<ParticleSnapshot>,
    /// ESS of the filter's weights at the end of the run (after any final resample).
    pub final_ess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSummary {
    pub final_estimate: StateVector,
    /// RMSE of `h(estimate)` against `h(truth)` over the measured steps.
    pub rmse_estimate: f64,
    /// RMSE of the measurements against `h(truth)` over the measured steps.
    pub rmse_measurement: f64,
    pub resample_count: usize,
    pub degenerate_count: usize,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn summary<M: MeasurementModel>(&self, model: &M) -> Result<TraceSummary> {
        let measured: Vec<&StepRecord> = self.records.iter().filter(|r| r.measurement.is_some()).collect();
        let truth: Vec<ObservationVector> = measured.iter().map(|r| model.observe(&r.truth)).collect();
        let est: Vec<ObservationVector> = measured.iter().map(|r| model.observe(&r.estimate)).collect();
        let meas: Vec<ObservationVector> = measured.iter().filter_map(|r| r.measurement.clone()).collect();
        let (rmse_estimate, rmse_measurement) = if measured.is_empty() {
            (0.0, 0.0)
        } else {
            (rmse(&est, &truth)?, rmse(&meas, &truth)?)
        };
        let last = self.records.last().ok_or(Error::Empty("trace"))?;
        Ok(TraceSummary {
            final_estimate: last.estimate.clone(),
            rmse_estimate,
            rmse_measurement,
            resample_count: self.records.iter().filter(|r| r.resampled).count(),
            degenerate_count: self.records.iter().filter(|r| r.degenerate).count(),
        })
    }
}

/// Truth trajectory of `horizon` states starting at `initial`, each step
/// drawing one process-noise vector.
pub fn simulate_truth<M: MotionModel>(
    model: &M,
    initial: &StateVector,
    horizon: usize,
    rng: &mut RngStream,
) -> Result<Vec<StateVector>> {
    let mut truth = Vec::with_capacity(horizon);
    truth.push(initial.clone());
    for _ in 1..horizon {
        let eta = model.sample_process_noise(rng);
        let next = model.propagate(truth.last().expect("non-empty"), None, &eta)?;
        truth.push(next);
    }
    Ok(truth)
}

/// Truth trajectory driven by explicit process noises; returns `noises.len() + 1` states.
pub fn simulate_truth_with_noises<M: MotionModel>(
    model: &M,
    initial: &StateVector,
    noises: &[StateVector],
) -> Result<Vec<StateVector>> {
    let mut truth = vec![initial.clone()];
    for eta in noises {
        let next = model.propagate(truth.last().expect("non-empty"), None, eta)?;
        truth.push(next);
    }
    Ok(truth)
}

/// `z[k] = h(truth[k]) + v_k` for every entry of `truth`.
pub fn simulate_measurements<M: MeasurementModel>(
    truth: &[StateVector],
    model: &M,
    rng: &mut RngStream,
) -> Result<Vec<ObservationVector>> {
    let noises: Vec<ObservationVector> = truth.iter().map(|_| model.sample_measurement_noise(rng)).collect();
    simulate_measurements_with_noises(truth, model, &noises)
}

pub fn simulate_measurements_with_noises<M: MeasurementModel>(
    truth: &[StateVector],
    model: &M,
    noises: &[ObservationVector],
) -> Result<Vec<ObservationVector>> {
    if truth.is_empty() {
        return Err(Error::Empty("truth"));
    }
    if truth.len() != noises.len() {
        return Err(Error::dims("measurement noises", truth.len(), noises.len()));
    }
    truth
        .iter()
        .zip(noises)
        .map(|(x, v)| measure(model, x, v))
        .collect()
}

fn measure<M: MeasurementModel>(model: &M, x: &StateVector, v: &ObservationVector) -> Result<ObservationVector> {
    let mut z = model.predict_measurement(x)?.into_inner();
    if v.dim() != z.len() {
        return Err(Error::dims("measurement noise", z.len(), v.dim()));
    }
    z.iter_mut().zip(v.iter()).for_each(|(z, v)| *z += v);
    Ok(StateVector::from_raw(z))
}

/// Root mean squared Euclidean distance between aligned sequences.
pub fn rmse(a: &[StateVector], b: &[StateVector]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dims("rmse sequence", a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::Empty("rmse input"));
    }
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        total += x.distance_squared(y)?;
    }
    Ok((total / a.len() as f64).sqrt())
}

/// Runs a scenario from a single seed.
pub fn run_scenario(scenario: &Scenario, seed: u64) -> Result<Trace> {
    scenario.validate()?;
    let model = &scenario.model;
    let mut pf = ParticleFilter::init(
        model.clone(),
        &scenario.prior,
        scenario.n_particles,
        scenario.policy,
        scenario.estimator,
        RngStream::new(seed),
    )?;

    let mut records = Vec::with_capacity(scenario.horizon);
    let mut snapshots = Vec::new();
    let snapshot = |k: usize, pf: &ParticleFilter<BuiltinModel>, out: &mut Vec<ParticleSnapshot>| {
        if scenario.dump_steps.contains(&k) {
            out.push(ParticleSnapshot {
                k,
                particles: pf.set().particles().to_vec(),
                weights: pf.set().weights(),
            });
        }
    };

    records.push(StepRecord {
        k: 0,
        truth: scenario.initial_truth.clone(),
        measurement: None,
        estimate: pf.set().weighted_mean(),
        ess: pf.current_ess(),
        resampled: false,
        degenerate: false,
    });
    snapshot(0, &pf, &mut snapshots);

    let mut truth = scenario.initial_truth.clone();
    for k in 1..scenario.horizon {
        let rng = pf.rng_mut();
        let eta = model.sample_process_noise(rng);
        truth = model.propagate(&truth, None, &eta)?;
        let v = model.sample_measurement_noise(rng);
        let z = measure(model, &truth, &v)?;

        let out = pf.step(&z, None)?;
        records.push(StepRecord {
            k,
            truth: truth.clone(),
            measurement: Some(z),
            estimate: out.estimate,
            ess: out.ess,
            resampled: out.resampled,
            degenerate: out.degenerate,
        });
        snapshot(k, &pf, &mut snapshots);
    }

    Ok(Trace {
        records,
        snapshots,
        final_ess: pf.current_ess(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(v: &[f64]) -> StateVector {
        StateVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn still_truth_without_process_noise() {
        let m = RandomWalk1D::new(0.0, 1.0).unwrap();
        let truth = simulate_truth(&m, &StateVector::scalar(0.0), 10, &mut RngStream::new(1)).unwrap();
        assert!(truth.iter().all(|x| x[0] == 0.0));
    }

    #[test]
    fn constant_velocity_truth_is_a_line() {
        let m = ConstantVelocity2D::new(1.0, 0.0, 0.0, 1.0).unwrap();
        let truth = simulate_truth(&m, &sv(&[0.0, 0.0, 1.0, 0.5]), 20, &mut RngStream::new(1)).unwrap();
        for (k, x) in truth.iter().enumerate() {
            assert_eq!(x.as_slice()[..2], [k as f64, 0.5 * k as f64]);
        }
    }

    #[test]
    fn walkthrough_truth_and_measurements() {
        let m = RandomWalk1D::new(1.0, 4.0).unwrap();
        let truth = simulate_truth_with_noises(&m, &StateVector::scalar(0.0), &[StateVector::scalar(1.2), StateVector::scalar(0.4)]).unwrap();
        let xs: Vec<f64> = truth.iter().map(|x| x[0]).collect();
        assert!((xs[1] - 1.2).abs() < 1e-12 && (xs[2] - 1.6).abs() < 1e-12);
        let z = simulate_measurements_with_noises(
            &truth[1..],
            &m,
            &[StateVector::scalar(2.0), StateVector::scalar(-1.0)],
        )
        .unwrap();
        assert!((z[0][0] - 3.2).abs() < 1e-12);
        assert!((z[1][0] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn noiseless_sensor_reads_truth() {
        let m = ConstantVelocity2D::new(1.0, 0.2, 0.05, 0.0).unwrap();
        let mut rng = RngStream::new(4);
        let truth = simulate_truth(&m, &sv(&[0.0, 0.0, 1.0, 0.5]), 10, &mut rng).unwrap();
        let z = simulate_measurements(&truth, &m, &mut rng).unwrap();
        for (x, z) in truth.iter().zip(&z) {
            assert_eq!(z.as_slice(), &x.as_slice()[..2]);
        }
        assert!(simulate_measurements(&[], &m, &mut rng).is_err());
    }

    #[test]
    fn rmse_examples() {
        let a = vec![sv(&[1.0]), sv(&[2.0]), sv(&[-3.0])];
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        let shifted: Vec<StateVector> = a.iter().map(|x| sv(&[x[0] - 0.75])).collect();
        assert!((rmse(&a, &shifted).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(rmse(&[sv(&[0.0, 0.0])], &[sv(&[3.0, 4.0])]).unwrap(), 5.0);
        assert!(matches!(rmse(&a[..1], &[sv(&[0.0, 0.0])]), Err(Error::DimensionMismatch { .. })));
        assert!(rmse(&a, &a[..2]).is_err());
    }

    #[test]
    fn trace_shape_and_determinism() {
        for scenario in [Scenario::demo_1d(), Scenario::demo_2d()] {
            let a = run_scenario(&scenario, 17).unwrap();
            let b = run_scenario(&scenario, 17).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.len(), scenario.horizon);
            assert!(a.records.iter().enumerate().all(|(i, r)| r.k == i));
            assert!(a.records[0].measurement.is_none());
            assert!(a.records[1..].iter().all(|r| r.measurement.is_some()));
            assert_ne!(a, run_scenario(&scenario, 18).unwrap());
        }
    }

    #[test]
    fn exact_model_tracks_exactly() {
        let mut s = Scenario::demo_2d();
        s.model = ConstantVelocity2D::new(1.0, 0.0, 0.0, 0.0).unwrap().into();
        s.prior = GaussianPrior::new(vec![0.0, 0.0, 1.0, 0.5], vec![0.0; 4]).unwrap();
        s.n_particles = 20;
        let trace = run_scenario(&s, 3).unwrap();
        for r in &trace.records {
            assert_eq!(r.estimate, r.truth);
            assert!(!r.degenerate);
        }
    }

    #[test]
    fn snapshots_follow_dump_steps() {
        let mut s = Scenario::demo_1d();
        s.dump_steps = vec![0, 3, 14, 99];
        let trace = run_scenario(&s, 1).unwrap();
        let ks: Vec<usize> = trace.snapshots.iter().map(|s| s.k).collect();
        assert_eq!(ks, vec![0, 3, 14]);
        assert!(trace.snapshots.iter().all(|s| s.particles.len() == 200 && s.weights.len() == 200));
    }

    #[test]
    fn summary_counts() {
        let s = Scenario::demo_1d();
        let trace = run_scenario(&s, 9).unwrap();
        let summary = trace.summary(&s.model).unwrap();
        assert_eq!(summary.resample_count, trace.records.iter().filter(|r| r.resampled).count());
        assert_eq!(summary.final_estimate, trace.records[14].estimate);
        assert!(summary.rmse_estimate > 0.0 && summary.rmse_measurement > 0.0);
    }

    #[test]
    fn scenario_validation() {
        let mut s = Scenario::demo_1d();
        s.horizon = 0;
        assert!(run_scenario(&s, 0).is_err());
        let mut s = Scenario::demo_1d();
        s.initial_truth = StateVector::zeros(4);
        assert!(run_scenario(&s, 0).is_err());
        let mut s = Scenario::demo_2d();
        s.prior = GaussianPrior::new(vec![0.0], vec![1.0]).unwrap();
        assert!(run_scenario(&s, 0).is_err());
    }

    #[test]
    fn single_step_horizon() {
        let mut s = Scenario::demo_1d();
        s.horizon = 1;
        let trace = run_scenario(&s, 0).unwrap();
        assert_eq!(trace.len(), 1);
        let summary = trace.summary(&s.model).unwrap();
        assert_eq!(summary.rmse_estimate, 0.0);
    }
}
