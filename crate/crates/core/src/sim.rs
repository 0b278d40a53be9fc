//! Slot-by-slot transmission simulator and the comparison policies.
//!
//! Every method shares the same sensing and access machinery (sense one
//! channel, access iff the sensor reports idle) and differs only in how it
//! picks the channel to sense and the intra refreshing rate:
//!
//! - `Oracle`: rate from the true post-transition state (ideal case).
//! - `BeliefMap`: rate for the most likely available state of the
//!   predicted belief (the proposed single-channel scheme).
//! - `LastAck`: rate from the gain in the last acknowledgment.
//! - `ConstantBeta`: fixed rate, no adaptation.
//! - `PomdpChannel`: channel from the solved sensing policy, rate by the
//!   belief rule (the proposed two-channel scheme).
//! - `RandomChannelConstBeta`: uniform channel draw, fixed rate.
//! - `OracleChannel`: the available channel with the highest true gain,
//!   rate from the true state (two-channel ideal case).
//!
//! Episodes are deterministic given `(setup, method, seed)`. Per-slot draw
//! order on the single episode stream: (1) each channel's state transition
//! in channel-index order, (2) the uniform channel draw for
//! `RandomChannelConstBeta` only, (3) the sensor outcome draw for the sensed
//! channel, (4) the acknowledgment quantization draw iff the slot was
//! accessed and truly available. Before slot 1, each channel's initial state
//! is drawn from its stationary distribution (uniform when the chain is
//! reducible), in channel-index order; beliefs start at the same vector.

use alloc::vec::Vec;
use thiserror::Error;

use crate::belief::{map_available_state, predict, update, Belief, BeliefError};
use crate::channel::{next_state_from_uniform, stationary_distribution, step};
use crate::rd::{optimal_beta, total_distortion, BetaChoice, BetaGrid, RdError, RdParams};
use crate::rng::SimRng;
use crate::sensing::{sample_observation, sense_and_access, ChannelEnv, Observation, SensorDesign};
use crate::solver::{policy_action, PolicySolution, SenseDecision};

/// The simulator supports one or two channels.
pub const MAX_CHANNELS: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("need between 1 and {MAX_CHANNELS} channels, got {n}")]
    BadChannelCount { n: usize },
    #[error("method PomdpChannel requires a solved policy")]
    MissingPolicy,
    #[error("policy solved for {policy} channels, setup has {setup}")]
    PolicyMismatch { policy: usize, setup: usize },
    #[error("constant rate {beta} is not on the configured beta grid")]
    BetaOffGrid { beta: f64 },
    #[error(transparent)]
    Rd(#[from] RdError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
}

/// Comparison policies of the experiment suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodId {
    Oracle,
    BeliefMap,
    LastAck,
    ConstantBeta(f64),
    PomdpChannel,
    RandomChannelConstBeta(f64),
    OracleChannel,
}

impl MethodId {
    pub fn label(&self) -> &'static str {
        match self {
            MethodId::Oracle => "oracle",
            MethodId::BeliefMap => "belief-map",
            MethodId::LastAck => "last-ack",
            MethodId::ConstantBeta(_) => "const-beta",
            MethodId::PomdpChannel => "pomdp",
            MethodId::RandomChannelConstBeta(_) => "random-const-beta",
            MethodId::OracleChannel => "oracle-channel",
        }
    }

    pub fn needs_policy(&self) -> bool {
        matches!(self, MethodId::PomdpChannel)
    }
}

/// The composite per-slot action: sensing choice, sensor operating point,
/// forced access decision, and the chosen intra refreshing rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeAction {
    pub sense_channel: Option<usize>,
    pub sensor: SensorDesign,
    pub access: bool,
    pub beta: f64,
}

/// Everything one episode needs. Immutable and shareable; the RNG stream is
/// created per episode from the seed.
#[derive(Debug, Clone, Copy)]
pub struct SimSetup<'a> {
    pub envs: &'a [ChannelEnv],
    pub rd: &'a RdParams,
    pub beta_grid: &'a BetaGrid,
    pub horizon: usize,
    pub penalty: f64,
    pub policy: Option<&'a PolicySolution>,
}

/// Trace of one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotRecord {
    /// 1-based slot index.
    pub slot: u32,
    /// True post-transition state per channel (entries past the channel
    /// count stay 0).
    pub true_states: [u8; MAX_CHANNELS],
    /// Whether each channel sat in its busy state this slot.
    pub busy: [bool; MAX_CHANNELS],
    pub sensed: Option<u8>,
    pub says_idle: bool,
    pub accessed: bool,
    pub observation: Option<Observation>,
    pub beta: f64,
    /// Total distortion for an accessed available slot; the penalty for
    /// no-access and collision slots (excluded from the averaged metric).
    pub distortion: f64,
    pub collided: bool,
}

/// Per-episode statistics. `avg_distortion` averages only the slots where
/// the sensed channel was truly available and accessed; with no such slot
/// it is the NaN sentinel and `accessed_available` is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub avg_distortion: f64,
    /// Fraction of slots in which the sensed channel was truly available.
    pub spectrum_utilization: f64,
    /// Empirical Pr{access | sensed channel busy} (0 when never busy).
    pub collision_rate: f64,
    pub slots: usize,
    pub accessed_available: usize,
    pub available_sensed: usize,
    pub busy_sensed: usize,
    pub accessed_busy: usize,
}

/// Optimal rate under perfect knowledge of the true state. For a busy state
/// the rate is a don't-care: the smallest grid value comes back flagged
/// degenerate.
pub fn beta_oracle(
    true_state: usize,
    env: &ChannelEnv,
    rd: &RdParams,
    grid: &BetaGrid,
) -> Result<BetaChoice, RdError> {
    if env.model.is_busy(true_state) {
        return Ok(BetaChoice {
            beta: grid.min_beta(),
            distortion: f64::INFINITY,
            degenerate: true,
        });
    }
    optimal_beta(rd, env.model.loss[true_state], grid)
}

/// Rate for the most likely available state of a predicted belief.
pub fn beta_belief_map(
    predicted: &[f64],
    env: &ChannelEnv,
    rd: &RdParams,
    grid: &BetaGrid,
) -> Result<f64, RdError> {
    let map = map_available_state(predicted);
    Ok(optimal_beta(rd, env.model.loss[map.state], grid)?.beta)
}

/// Rate from the gain level of the last acknowledgment; `fallback` applies
/// when the history holds no gain yet (never acknowledged, or busy seen).
pub fn beta_last_ack(
    last_gain: Option<usize>,
    env: &ChannelEnv,
    rd: &RdParams,
    grid: &BetaGrid,
    fallback: f64,
) -> Result<f64, RdError> {
    match last_gain {
        Some(level) => Ok(optimal_beta(rd, env.model.loss[level], grid)?.beta),
        None => Ok(fallback),
    }
}

/// Stationary distribution of the channel, or uniform when the chain is
/// reducible. Used to initialize beliefs and states and as the LastAck
/// fallback basis.
pub fn resting_distribution(env: &ChannelEnv) -> Vec<f64> {
    let s = env.model.state_count();
    stationary_distribution(&env.model.transition)
        .unwrap_or_else(|_| alloc::vec![1.0 / s as f64; s])
}

/// Default LastAck fallback: the optimal rate of the most likely available
/// state under the resting distribution.
pub fn stationary_fallback_beta(
    env: &ChannelEnv,
    rd: &RdParams,
    grid: &BetaGrid,
) -> Result<f64, RdError> {
    let pi = resting_distribution(env);
    let map = map_available_state(&pi);
    Ok(optimal_beta(rd, env.model.loss[map.state], grid)?.beta)
}

fn validate(setup: &SimSetup<'_>, method: &MethodId) -> Result<(), SimError> {
    let n = setup.envs.len();
    if n == 0 || n > MAX_CHANNELS {
        return Err(SimError::BadChannelCount { n });
    }
    if let MethodId::ConstantBeta(b) | MethodId::RandomChannelConstBeta(b) = method {
        if !setup.beta_grid.contains(*b) {
            return Err(SimError::BetaOffGrid { beta: *b });
        }
    }
    if method.needs_policy() {
        match setup.policy {
            None => return Err(SimError::MissingPolicy),
            Some(p) if p.n_channels != n => {
                return Err(SimError::PolicyMismatch {
                    policy: p.n_channels,
                    setup: n,
                })
            }
            Some(_) => {}
        }
    }
    Ok(())
}

/// Run one seeded episode of `setup.horizon` slots and return the trace.
pub fn run_episode(
    setup: &SimSetup<'_>,
    method: &MethodId,
    seed: u64,
) -> Result<Vec<SlotRecord>, SimError> {
    validate(setup, method)?;
    let n = setup.envs.len();
    let mut rng = SimRng::new(seed);

    let resting: Vec<Vec<f64>> = setup.envs.iter().map(resting_distribution).collect();
    let mut states: Vec<usize> = resting
        .iter()
        .map(|pi| next_state_from_uniform(pi, rng.next_f64()))
        .collect();
    let mut beliefs: Vec<Belief> = resting
        .iter()
        .map(|pi| Belief::from_probs(pi.clone()).expect("resting vector is a distribution"))
        .collect();
    let mut last_gain: Vec<Option<usize>> = alloc::vec![None; n];
    let fallback: Vec<f64> = setup
        .envs
        .iter()
        .map(|e| stationary_fallback_beta(e, setup.rd, setup.beta_grid))
        .collect::<Result<_, _>>()?;

    let mut records = Vec::with_capacity(setup.horizon);
    for slot in 1..=setup.horizon {
        // (1) state transitions, channel-index order
        for (c, st) in states.iter_mut().enumerate() {
            *st = step(*st, &setup.envs[c].model.transition, &mut rng);
        }

        // channel selection (one draw for the random baseline only)
        let chosen: Option<usize> = match method {
            MethodId::Oracle
            | MethodId::BeliefMap
            | MethodId::LastAck
            | MethodId::ConstantBeta(_) => Some(0),
            MethodId::PomdpChannel => {
                let policy = setup.policy.expect("validated above");
                match policy_action(policy, slot, &beliefs).decision {
                    SenseDecision::Sense(c) => Some(c),
                    SenseDecision::NoSense => None,
                }
            }
            MethodId::RandomChannelConstBeta(_) => Some(rng.uniform_index(n)),
            MethodId::OracleChannel => {
                let mut pick = 0usize;
                let mut best_gain = f64::NEG_INFINITY;
                for (c, env) in setup.envs.iter().enumerate() {
                    if !env.model.is_busy(states[c]) && env.model.gains[states[c]] > best_gain {
                        best_gain = env.model.gains[states[c]];
                        pick = c;
                    }
                }
                Some(pick) // all-busy falls through to channel 0
            }
        };

        let action = match chosen {
            None => CompositeAction {
                sense_channel: None,
                sensor: setup.envs[0].sensor,
                access: false,
                beta: setup.beta_grid.min_beta(),
            },
            Some(c) => {
                let env = &setup.envs[c];
                let beta = match method {
                    MethodId::Oracle | MethodId::OracleChannel => {
                        beta_oracle(states[c], env, setup.rd, setup.beta_grid)?.beta
                    }
                    MethodId::BeliefMap | MethodId::PomdpChannel => {
                        let q = predict(&beliefs[c], &env.model.transition);
                        beta_belief_map(q.probs(), env, setup.rd, setup.beta_grid)?
                    }
                    MethodId::LastAck => {
                        beta_last_ack(last_gain[c], env, setup.rd, setup.beta_grid, fallback[c])?
                    }
                    MethodId::ConstantBeta(b) | MethodId::RandomChannelConstBeta(b) => *b,
                };
                // (2) sensor outcome draw
                let out = sense_and_access(env.model.is_busy(states[c]), &env.sensor, &mut rng);
                CompositeAction {
                    sense_channel: Some(c),
                    sensor: env.sensor,
                    access: out.access,
                    beta,
                }
            }
        };
        debug_assert!(!action.access || action.sense_channel.is_some());

        let mut record = SlotRecord {
            slot: slot as u32,
            true_states: [0; MAX_CHANNELS],
            busy: [false; MAX_CHANNELS],
            sensed: action.sense_channel.map(|c| c as u8),
            says_idle: action.access,
            accessed: action.access,
            observation: None,
            beta: action.beta,
            distortion: setup.penalty,
            collided: false,
        };
        for (c, &st) in states.iter().enumerate() {
            record.true_states[c] = st as u8;
            record.busy[c] = setup.envs[c].model.is_busy(st);
        }

        if let Some(c) = action.sense_channel {
            let env = &setup.envs[c];
            let busy = env.model.is_busy(states[c]);
            record.collided = action.access && busy;
            // (3) acknowledgment draw iff accessed and available
            let obs = sample_observation(states[c], action.access, &env.kernel, &mut rng);
            record.observation = Some(obs);
            if action.access && !busy {
                record.distortion =
                    total_distortion(setup.rd, env.model.loss[states[c]], action.beta)?;
            }
            if let Observation::GainLevel(level) = obs {
                last_gain[c] = Some(level);
            }
        }

        // belief updates: Bayes on the sensed channel, prediction elsewhere
        for c in 0..n {
            beliefs[c] = match (action.sense_channel, record.observation) {
                (Some(sc), Some(obs)) if sc == c => update(
                    &beliefs[c],
                    &setup.envs[c].model.transition,
                    &setup.envs[c].kernel,
                    obs,
                )?,
                _ => predict(&beliefs[c], &setup.envs[c].model.transition),
            };
        }

        records.push(record);
    }
    Ok(records)
}

/// Derive the per-episode metrics from a slot trace.
pub fn compute_metrics(records: &[SlotRecord]) -> Metrics {
    let slots = records.len();
    let mut accessed_available = 0usize;
    let mut available_sensed = 0usize;
    let mut busy_sensed = 0usize;
    let mut accessed_busy = 0usize;
    let mut dist_sum = 0.0f64;

    for r in records {
        let Some(c) = r.sensed else { continue };
        if r.busy[c as usize] {
            busy_sensed += 1;
            if r.accessed {
                accessed_busy += 1;
            }
        } else {
            available_sensed += 1;
            if r.accessed {
                accessed_available += 1;
                dist_sum += r.distortion;
            }
        }
    }

    Metrics {
        avg_distortion: if accessed_available > 0 {
            dist_sum / accessed_available as f64
        } else {
            f64::NAN
        },
        spectrum_utilization: if slots > 0 {
            available_sensed as f64 / slots as f64
        } else {
            0.0
        },
        collision_rate: if busy_sensed > 0 {
            accessed_busy as f64 / busy_sensed as f64
        } else {
            0.0
        },
        slots,
        accessed_available,
        available_sensed,
        busy_sensed,
        accessed_busy,
    }
}
