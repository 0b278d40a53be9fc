//! Information-state (belief) tracking over the channel state.
//!
//! The belief at the beginning of slot `k` is the posterior over the state
//! *prior to that slot's transition*, given the full decision and
//! acknowledgment history. One filter step is predict-then-correct:
//! `lambda'(x) ∝ B(y | x) * sum_x' lambda(x') A(x', x)`. A channel that was
//! not sensed advances by prediction only.
//!
//! ```
//! use cogvid_core::belief::{update, Belief};
//! use cogvid_core::channel::{ChannelModel, TransitionMatrix};
//! use cogvid_core::sensing::{observation_kernel, Observation, SensorDesign};
//!
//! let a = TransitionMatrix::from_rows(&[&[0.9, 0.1], &[0.5, 0.5]]).unwrap();
//! let model = ChannelModel::new(vec![1.0], vec![0.1], a.clone(), 1.0e6, 0.1).unwrap();
//! let sensor = SensorDesign::new(0.4, 0.064).unwrap();
//! let kernel = observation_kernel(&model, &sensor, 0.1).unwrap();
//!
//! // certainly available, then a slot passes with no acknowledgment:
//! // either the sensor false-alarmed (prob 0.4) or the channel went busy
//! let pi = Belief::point_mass(2, 0);
//! let pi = update(&pi, &a, &kernel, Observation::BusySeen).unwrap();
//! assert!((pi.probs()[0] - 18.0 / 23.0).abs() < 1e-12);
//! ```

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::channel::TransitionMatrix;
use crate::math;
use crate::sensing::{Observation, ObservationKernel};

/// Beliefs are renormalized on every update; sums are kept within this.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeliefError {
    #[error("belief entries must be in [0, 1] and sum to 1 (sum = {sum})")]
    NotASimplex { sum: f64 },
    #[error("observation {observation:?} has zero probability under belief {belief:?}")]
    ImpossibleObservation {
        belief: Vec<f64>,
        observation: Observation,
    },
    #[error("dimension mismatch: belief has {belief} states, model has {model}")]
    DimensionMismatch { belief: usize, model: usize },
}

/// Probability vector over the `S` channel states.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    p: Vec<f64>,
}

impl Belief {
    pub fn from_probs(p: Vec<f64>) -> Result<Self, BeliefError> {
        let sum: f64 = p.iter().sum();
        if p.iter().any(|v| !(0.0..=1.0 + SIMPLEX_TOL).contains(v))
            || math::abs(sum - 1.0) > SIMPLEX_TOL
        {
            return Err(BeliefError::NotASimplex { sum });
        }
        let mut b = Self { p };
        b.renormalize();
        Ok(b)
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            p: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, state: usize) -> Self {
        let mut p = vec![0.0; n];
        p[state] = 1.0;
        Self { p }
    }

    #[inline]
    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    fn renormalize(&mut self) {
        let sum: f64 = self.p.iter().sum();
        for v in &mut self.p {
            *v /= sum;
        }
    }
}

/// Distribution of the state *after* the slot's transition: `pi^T A`.
pub fn predict(pi: &Belief, a: &TransitionMatrix) -> Belief {
    Belief {
        p: predict_probs(pi.probs(), a),
    }
}

pub(crate) fn predict_probs(pi: &[f64], a: &TransitionMatrix) -> Vec<f64> {
    let n = a.size();
    debug_assert_eq!(pi.len(), n);
    let mut out = vec![0.0; n];
    for (x_prev, &w) in pi.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let row = a.row(x_prev);
        for x in 0..n {
            out[x] += w * row[x];
        }
    }
    out
}

/// Exact HMM filter step: predict through `a`, correct with `B(y | x)`,
/// renormalize. Errors when the observation has zero probability under the
/// predicted belief, carrying the offending pair.
pub fn update(
    pi: &Belief,
    a: &TransitionMatrix,
    kernel: &ObservationKernel,
    y: Observation,
) -> Result<Belief, BeliefError> {
    if pi.len() != a.size() {
        return Err(BeliefError::DimensionMismatch {
            belief: pi.len(),
            model: a.size(),
        });
    }
    let mut p = predict_probs(pi.probs(), a);
    let mut norm = 0.0;
    for (x, v) in p.iter_mut().enumerate() {
        *v *= kernel.prob(x, y);
        norm += *v;
    }
    if norm <= 0.0 {
        return Err(BeliefError::ImpossibleObservation {
            belief: pi.probs().to_vec(),
            observation: y,
        });
    }
    for v in &mut p {
        *v /= norm;
    }
    Ok(Belief { p })
}

/// Most likely available state of a predicted distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MapState {
    pub state: usize,
    /// Set when every available state carries zero mass.
    pub degenerate: bool,
}

/// Near-tie width for the MAP argmax: probability differences below this
/// are round-off from the linear algebra (stationary solves, repeated
/// prediction), not evidence.
const MAP_TIE_TOL: f64 = 1e-12;

/// Argmax over the available states (busy excluded), ties toward the lowest
/// index (near-ties within `MAP_TIE_TOL` count as ties, so exactly
/// symmetric models resolve deterministically). Even when the busy mass
/// dominates this returns the most likely *available* state: if the channel
/// turns out idle after all, the chosen rate should fit the gain we would
/// then be facing.
pub fn map_available_state(predicted: &[f64]) -> MapState {
    let avail = predicted.len() - 1;
    let mut best = 0usize;
    let mut best_p = predicted[0];
    for (i, &p) in predicted.iter().enumerate().take(avail).skip(1) {
        if p > best_p + MAP_TIE_TOL {
            best_p = p;
            best = i;
        }
    }
    MapState {
        state: best,
        degenerate: best_p <= 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_transition, ChannelModel};
    use crate::sensing::{observation_kernel, SensorDesign};

    fn two_state_kernel(epsilon: f64) -> ObservationKernel {
        let a = build_transition(2, 0.9, 0.1, 0.5).unwrap();
        let model = ChannelModel::new(vec![1.0], vec![0.1], a, 1.0e6, 0.1).unwrap();
        let sensor = SensorDesign::new(epsilon, 0.064).unwrap();
        observation_kernel(&model, &sensor, 0.1).unwrap()
    }

    #[test]
    fn predict_cases() {
        let a = TransitionMatrix::from_rows(&[&[0.9, 0.1], &[0.5, 0.5]]).unwrap();
        let e0 = Belief::point_mass(2, 0);
        assert_eq!(predict(&e0, &a).probs(), &[0.9, 0.1]);

        let half = Belief::from_probs(vec![0.5, 0.5]).unwrap();
        let q = predict(&half, &a);
        assert!((q.probs()[0] - 0.7).abs() < 1e-15);
        assert!((q.probs()[1] - 0.3).abs() < 1e-15);

        // doubly stochastic matrix keeps the uniform belief uniform
        let ds = TransitionMatrix::from_rows(&[&[0.6, 0.4], &[0.4, 0.6]]).unwrap();
        let u = predict(&Belief::uniform(2), &ds);
        assert!((u.probs()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn update_hand_cases() {
        let a = TransitionMatrix::from_rows(&[&[0.9, 0.1], &[0.5, 0.5]]).unwrap();
        let k = two_state_kernel(0.4);
        let e0 = Belief::point_mass(2, 0);

        // a gain acknowledgment rules the busy state out entirely
        let up = update(&e0, &a, &k, Observation::GainLevel(0)).unwrap();
        assert!((up.probs()[0] - 1.0).abs() < 1e-15);
        assert_eq!(up.probs()[1], 0.0);

        // (0.9*0.4, 0.1*1.0) / 0.46
        let up = update(&e0, &a, &k, Observation::BusySeen).unwrap();
        assert!((up.probs()[0] - 18.0 / 23.0).abs() < 1e-12);
        assert!((up.probs()[1] - 5.0 / 23.0).abs() < 1e-12);
        assert!((up.probs()[0] - 0.782609).abs() < 5e-7);
    }

    #[test]
    fn update_rejects_impossible_observation() {
        // absorbing busy state: a gain acknowledgment is impossible
        let a = TransitionMatrix::from_rows(&[&[0.9, 0.1], &[0.0, 1.0]]).unwrap();
        let k = two_state_kernel(0.4);
        let busy = Belief::point_mass(2, 1);
        match update(&busy, &a, &k, Observation::GainLevel(0)) {
            Err(BeliefError::ImpossibleObservation {
                belief,
                observation,
            }) => {
                assert_eq!(belief, vec![0.0, 1.0]);
                assert_eq!(observation, Observation::GainLevel(0));
            }
            other => panic!("expected impossible-observation error, got {other:?}"),
        }
    }

    #[test]
    fn map_state_cases() {
        let m = map_available_state(&[0.3, 0.3, 0.4]);
        assert_eq!((m.state, m.degenerate), (0, false)); // tie to lowest index
        let m = map_available_state(&[0.1, 0.2, 0.7]);
        assert_eq!((m.state, m.degenerate), (1, false)); // busy mass ignored
        let m = map_available_state(&[0.0, 0.0, 1.0]);
        assert_eq!((m.state, m.degenerate), (0, true));
    }

    #[test]
    fn simplex_validation() {
        assert!(Belief::from_probs(vec![0.5, 0.6]).is_err());
        assert!(Belief::from_probs(vec![0.5, 0.5]).is_ok());
        let b = Belief::from_probs(vec![0.25, 0.75]).unwrap();
        assert_eq!(b.probs().len(), 2);
    }
}
