//! Spectrum sensing and the end-of-slot acknowledgment observation model.
//!
//! The sensor is described by its operating point `(epsilon, delta)`:
//! `epsilon` is the probability of flagging an idle channel as busy (false
//! alarm), `delta` the probability of flagging a busy channel as idle
//! (miss). Under the separation rule the radio accesses whenever the sensor
//! reports idle, so setting `delta = zeta` meets the collision constraint
//! with equality and decouples sensor design from the access policy.
//!
//! The receiver estimates the channel gain with zero-mean Gaussian error of
//! standard deviation `sigma` and quantizes it to the nearest gain level;
//! the resulting confusion matrix `P_ce` combines with the sensor into the
//! acknowledgment observation kernel `B`. The sensor outcome itself is never
//! part of the observation: a slot without an acknowledgment (false alarm,
//! collision, or genuinely busy channel) is observed as `BusySeen`.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::channel::ChannelModel;
use crate::math;
use crate::rng::SimRng;

/// Observation-kernel rows must close to 1 within this tolerance.
pub const KERNEL_ROW_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensingError {
    #[error("probability {value} for {name} outside [0, 1]")]
    BadProbability { name: &'static str, value: f64 },
    #[error("ROC curvature kappa = {kappa} must be >= 1")]
    BadKappa { kappa: f64 },
    #[error("zeta = 0 requires epsilon = 1: the sensor never reports idle and the channel is never used")]
    ZeroCollisionTarget,
    #[error("invalid gain levels: {0}")]
    BadGains(&'static str),
    #[error("estimation sigma = {sigma} must be >= 0")]
    BadSigma { sigma: f64 },
}

/// Sensor operating point on the ROC curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorDesign {
    /// False alarm: probability of miss detection of the idle channel.
    pub epsilon: f64,
    /// Miss: probability of miss detection of the busy channel.
    pub delta: f64,
}

impl SensorDesign {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self, SensingError> {
        for &(v, name) in &[(epsilon, "epsilon"), (delta, "delta")] {
            if !(0.0..=1.0).contains(&v) || v.is_nan() {
                return Err(SensingError::BadProbability { name, value: v });
            }
        }
        Ok(Self { epsilon, delta })
    }
}

/// Analytic single-detector ROC: `delta = (1 - epsilon)^kappa`.
///
/// Monotone decreasing with the right endpoints (`delta(0) = 1`,
/// `delta(1) = 0`), convex for `kappa > 1`, and invertible, which is all the
/// separation rule needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocModel {
    pub kappa: f64,
}

impl RocModel {
    pub fn new(kappa: f64) -> Result<Self, SensingError> {
        if !(kappa >= 1.0) || !kappa.is_finite() {
            return Err(SensingError::BadKappa { kappa });
        }
        Ok(Self { kappa })
    }

    /// Miss probability at false-alarm rate `epsilon`.
    pub fn delta_for_epsilon(&self, epsilon: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&epsilon));
        math::powf(1.0 - epsilon, self.kappa)
    }

    /// Operating point meeting the collision constraint with equality:
    /// `delta = zeta`, `epsilon = 1 - zeta^(1/kappa)`.
    pub fn operating_point_for_collision(&self, zeta: f64) -> Result<SensorDesign, SensingError> {
        if !(0.0..=1.0).contains(&zeta) || zeta.is_nan() {
            return Err(SensingError::BadProbability {
                name: "zeta",
                value: zeta,
            });
        }
        if zeta == 0.0 {
            return Err(SensingError::ZeroCollisionTarget);
        }
        let epsilon = 1.0 - math::powf(zeta, 1.0 / self.kappa);
        SensorDesign::new(epsilon.clamp(0.0, 1.0), zeta)
    }
}

/// Receiver gain-quantization confusion matrix.
///
/// Entry `(i, j)` is the probability that the noisy estimate of true level
/// `gamma_i` quantizes to level `gamma_j`: the Gaussian mass between the
/// midpoints around `gamma_j` (open-ended for the lowest and highest level).
/// `sigma = 0` yields the identity; a single level yields `[1]`.
pub fn gain_quantization_matrix(gains: &[f64], sigma: f64) -> Result<Vec<f64>, SensingError> {
    if gains.is_empty() {
        return Err(SensingError::BadGains("need at least one gain level"));
    }
    if gains.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(SensingError::BadGains("gains must be strictly increasing"));
    }
    if !(sigma >= 0.0) || sigma.is_nan() {
        return Err(SensingError::BadSigma { sigma });
    }
    let n = gains.len();
    let mut p = vec![0.0; n * n];
    if sigma == 0.0 || n == 1 {
        for i in 0..n {
            p[i * n + i] = 1.0;
        }
        return Ok(p);
    }
    let scale = 2.0 * core::f64::consts::SQRT_2 * sigma;
    for i in 0..n {
        let gi = gains[i];
        for j in 0..n {
            p[i * n + j] = if j == 0 {
                0.5 * (1.0 + math::erf((gains[0] + gains[1] - 2.0 * gi) / scale))
            } else if j == n - 1 {
                0.5 * (1.0 - math::erf((gains[n - 2] + gains[n - 1] - 2.0 * gi) / scale))
            } else {
                0.5 * (math::erf((gains[j] + gains[j + 1] - 2.0 * gi) / scale)
                    - math::erf((gains[j] + gains[j - 1] - 2.0 * gi) / scale))
            };
        }
    }
    Ok(p)
}

/// End-of-slot observation: either the acknowledged quantized gain level, or
/// no acknowledgment at all (`BusySeen`, the `gamma_S` symbol).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observation {
    /// Acknowledged gain level index in `0..S-1`.
    GainLevel(usize),
    /// No acknowledgment: channel busy, collided, or not accessed.
    BusySeen,
}

impl Observation {
    /// Column index of this observation in the kernel matrix.
    #[inline]
    pub fn column(&self, s: usize) -> usize {
        match *self {
            Observation::GainLevel(j) => j,
            Observation::BusySeen => s - 1,
        }
    }

    /// Observation for kernel column `col`.
    #[inline]
    pub fn from_column(col: usize, s: usize) -> Self {
        if col == s - 1 {
            Observation::BusySeen
        } else {
            Observation::GainLevel(col)
        }
    }
}

/// Conditional observation probabilities `B(y | x)`.
///
/// Rows are true states (gain levels then busy), columns observations
/// (gain levels then `BusySeen`):
///
/// - available `i`, gain obs `j`: `P_ce(i, j) * (1 - epsilon)`
/// - available `i`, `BusySeen`:   `epsilon`
/// - busy, gain obs:              `0`
/// - busy, `BusySeen`:            `1`
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationKernel {
    s: usize,
    b: Vec<f64>,
    p_ce: Vec<f64>,
    sigma: f64,
    epsilon: f64,
    renormalized: bool,
}

impl ObservationKernel {
    #[inline]
    pub fn state_count(&self) -> usize {
        self.s
    }

    /// Row of observation probabilities for true state `x`.
    #[inline]
    pub fn row(&self, x: usize) -> &[f64] {
        &self.b[x * self.s..(x + 1) * self.s]
    }

    /// `B(y | x)`.
    #[inline]
    pub fn prob(&self, x: usize, y: Observation) -> f64 {
        self.b[x * self.s + y.column(self.s)]
    }

    /// Gain-quantization probability `P_ce(i, j)` for available levels.
    #[inline]
    pub fn p_ce(&self, i: usize, j: usize) -> f64 {
        self.p_ce[i * (self.s - 1) + j]
    }

    #[inline]
    pub fn p_ce_row(&self, i: usize) -> &[f64] {
        &self.p_ce[i * (self.s - 1)..(i + 1) * (self.s - 1)]
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// True when a row residual exceeded [`KERNEL_ROW_TOL`] and the row was
    /// renormalized during construction.
    pub fn renormalized(&self) -> bool {
        self.renormalized
    }
}

/// Build the observation kernel for one channel and sensor operating point.
pub fn observation_kernel(
    model: &ChannelModel,
    sensor: &SensorDesign,
    sigma: f64,
) -> Result<ObservationKernel, SensingError> {
    let s = model.state_count();
    let n = s - 1;
    let mut p_ce = gain_quantization_matrix(&model.gains, sigma)?;

    let mut renormalized = false;
    for i in 0..n {
        let sum: f64 = p_ce[i * n..(i + 1) * n].iter().sum();
        if math::abs(sum - 1.0) > KERNEL_ROW_TOL {
            renormalized = true;
            for v in &mut p_ce[i * n..(i + 1) * n] {
                *v /= sum;
            }
        }
    }

    let eps = sensor.epsilon;
    let mut b = vec![0.0; s * s];
    for i in 0..n {
        for j in 0..n {
            b[i * s + j] = p_ce[i * n + j] * (1.0 - eps);
        }
        b[i * s + n] = eps;
    }
    b[n * s + n] = 1.0;

    Ok(ObservationKernel {
        s,
        b,
        p_ce,
        sigma,
        epsilon: eps,
        renormalized,
    })
}

/// Sensor outcome and the access decision it forces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SenseOutcome {
    pub says_idle: bool,
    /// Separation rule: access iff the sensor reports idle.
    pub access: bool,
}

/// Draw the sensor outcome for the sensed channel (one uniform consumed).
///
/// An available channel is reported idle with probability `1 - epsilon`; a
/// busy channel with probability `delta` (the collision path).
pub fn sense_and_access(
    state_is_busy: bool,
    sensor: &SensorDesign,
    rng: &mut SimRng,
) -> SenseOutcome {
    let p_idle = if state_is_busy {
        sensor.delta
    } else {
        1.0 - sensor.epsilon
    };
    let says_idle = rng.bernoulli(p_idle);
    SenseOutcome {
        says_idle,
        access: says_idle,
    }
}

/// Draw the end-of-slot observation.
///
/// Only an accessed, truly available slot produces an acknowledgment (one
/// uniform consumed for the gain quantization); every other case (not
/// accessed, or a collided transmission) is observed as `BusySeen`.
/// Marginally over [`sense_and_access`] this reproduces the kernel exactly.
pub fn sample_observation(
    true_state: usize,
    accessed: bool,
    kernel: &ObservationKernel,
    rng: &mut SimRng,
) -> Observation {
    let busy = kernel.state_count() - 1;
    if !accessed || true_state == busy {
        return Observation::BusySeen;
    }
    let row = kernel.p_ce_row(true_state);
    let u = rng.next_f64();
    let mut acc = 0.0;
    for (j, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return Observation::GainLevel(j);
        }
    }
    Observation::GainLevel(row.len() - 1)
}

/// A channel with its configured sensor and observation kernel: the unit
/// the planner and the simulator both operate on.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEnv {
    pub model: ChannelModel,
    pub sensor: SensorDesign,
    pub kernel: ObservationKernel,
}

impl ChannelEnv {
    pub fn new(
        model: ChannelModel,
        sensor: SensorDesign,
        sigma: f64,
    ) -> Result<Self, SensingError> {
        let kernel = observation_kernel(&model, &sensor, sigma)?;
        Ok(Self {
            model,
            sensor,
            kernel,
        })
    }
}
