//! Finite-horizon POMDP planning on a belief-simplex grid.
//!
//! The composite action space factorizes: the sensor operating point is
//! fixed by the separation rule, the access decision is forced by the sensor
//! outcome, and the intra refreshing rate is chosen by the most-likely-
//! available-state rule inside the cost. What remains for dynamic
//! programming is the sensing choice: which channel to sense (or, with a
//! single channel, whether to sense at all).
//!
//! The value function is approximated on the grid of belief vectors with
//! coordinates `k/M`; continuation values are read at the nearest grid point
//! (L1 distance, ties to the lexicographically smallest point). Beliefs of
//! independent channels stay factorized, so the joint grid is the product of
//! the per-channel grids. A slot without access (sensor said busy, or a
//! collision) costs the finite penalty `penalty` in place of the infinite
//! loss asymptote.
//!
//! Backups within a stage are independent across grid points and could be
//! parallelized; the sequential order used here already makes the result
//! bit-identical run to run.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::belief::{map_available_state, predict_probs, Belief};
use crate::math;
use crate::rd::{optimal_beta, total_distortion, BetaGrid, RdError, RdParams};
use crate::sensing::ChannelEnv;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("joint belief grid has {points} points, above the configured cap {cap}")]
    GridTooLarge { points: usize, cap: usize },
    #[error("invalid solver configuration: {0}")]
    BadConfig(&'static str),
    #[error(transparent)]
    Rd(#[from] RdError),
}

/// The sensing decision stored per stage and grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SenseDecision {
    /// Sense (and access on an idle report) the given channel.
    Sense(usize),
    /// Skip the slot; the belief advances by prediction only.
    NoSense,
}

impl SenseDecision {
    /// Compact encoding for policy artifacts: channel index, 255 = no-sense.
    pub fn code(&self) -> u8 {
        match *self {
            SenseDecision::Sense(c) => c as u8,
            SenseDecision::NoSense => u8::MAX,
        }
    }

    pub fn from_code(code: u8) -> Self {
        if code == u8::MAX {
            SenseDecision::NoSense
        } else {
            SenseDecision::Sense(code as usize)
        }
    }
}

/// How the immediate cost picks the intra refreshing rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaRule {
    /// The optimal rate for the most likely available state of the
    /// predicted belief (the proposed scheme).
    MostLikelyAvailable,
    /// A fixed rate (non-adaptive baselines).
    Constant(f64),
}

/// All belief vectors with coordinates `k/M` summing to 1, in
/// lexicographic order (`C(M + S - 1, S - 1)` points).
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefGrid {
    m: usize,
    dim: usize,
    points: Vec<f64>, // len() * dim, row-major
}

impl BeliefGrid {
    pub fn new(m: usize, dim: usize) -> Result<Self, SolverError> {
        if m == 0 || dim == 0 {
            return Err(SolverError::BadConfig(
                "grid resolution and dimension must be positive",
            ));
        }
        let count = math::binomial(m + dim - 1, dim - 1);
        let mut points = Vec::with_capacity(count * dim);
        let mut coords = vec![0usize; dim];
        fill_compositions(m, m, 0, &mut coords, &mut points);
        debug_assert_eq!(points.len(), count * dim);
        Ok(Self { m, dim, points })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, idx: usize) -> &[f64] {
        &self.points[idx * self.dim..(idx + 1) * self.dim]
    }

    /// Index of the grid point nearest to `v` in L1 distance; ties resolve
    /// to the lexicographically smallest point (the scan order).
    pub fn nearest(&self, v: &[f64]) -> usize {
        debug_assert_eq!(v.len(), self.dim);
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for idx in 0..self.len() {
            let pt = self.point(idx);
            let mut d = 0.0;
            for (a, b) in pt.iter().zip(v) {
                d += math::abs(a - b);
            }
            if d < best_d {
                best_d = d;
                best = idx;
            }
        }
        best
    }
}

fn fill_compositions(
    m: usize,
    remaining: usize,
    coord: usize,
    coords: &mut [usize],
    out: &mut Vec<f64>,
) {
    let dim = coords.len();
    if coord == dim - 1 {
        coords[coord] = remaining;
        out.extend(coords.iter().map(|&k| k as f64 / m as f64));
        return;
    }
    for k in 0..=remaining {
        coords[coord] = k;
        fill_compositions(m, remaining - k, coord + 1, coords, out);
    }
}

/// Solver knobs. `resolution` is the per-channel grid resolution `M`;
/// `max_joint_points` guards the product-grid memory footprint.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub horizon: usize,
    pub resolution: usize,
    pub penalty: f64,
    pub max_joint_points: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            horizon: 200,
            resolution: 10,
            penalty: 500.0,
            max_joint_points: 4_000_000,
        }
    }
}

fn beta_for_predicted(
    rule: &BetaRule,
    predicted: &[f64],
    env: &ChannelEnv,
    rd: &RdParams,
    grid: &BetaGrid,
) -> Result<f64, RdError> {
    match *rule {
        BetaRule::MostLikelyAvailable => {
            let map = map_available_state(predicted);
            Ok(optimal_beta(rd, env.model.loss[map.state], grid)?.beta)
        }
        BetaRule::Constant(b) => Ok(b),
    }
}

/// Expected cost of sensing this channel for one slot from belief `pi`.
///
/// The expectation runs over the post-transition state and the sensor
/// outcome: an accessed available slot costs the total distortion at that
/// state's loss ratio, every other outcome (false alarm, collision, busy)
/// costs `penalty`.
pub fn expected_immediate_cost(
    pi: &Belief,
    env: &ChannelEnv,
    rd: &RdParams,
    beta_grid: &BetaGrid,
    penalty: f64,
    rule: &BetaRule,
) -> Result<f64, SolverError> {
    let q = predict_probs(pi.probs(), &env.model.transition);
    immediate_cost_of_predicted(&q, env, rd, beta_grid, penalty, rule)
}

fn immediate_cost_of_predicted(
    q: &[f64],
    env: &ChannelEnv,
    rd: &RdParams,
    beta_grid: &BetaGrid,
    penalty: f64,
    rule: &BetaRule,
) -> Result<f64, SolverError> {
    let busy = env.model.busy_state();
    let eps = env.sensor.epsilon;
    let beta = beta_for_predicted(rule, q, env, rd, beta_grid)?;
    let mut cost = q[busy] * penalty;
    for i in 0..busy {
        if q[i] == 0.0 {
            continue;
        }
        let d = total_distortion(rd, env.model.loss[i], beta)?;
        cost += q[i] * ((1.0 - eps) * d + eps * penalty);
    }
    Ok(cost)
}

/// Per-channel quantities reused by every stage of the backward induction.
struct ChannelPlan {
    /// Expected immediate cost of sensing, per grid point.
    imm: Vec<f64>,
    /// Observation branches per grid point: (probability, next grid index).
    branches: Vec<Vec<(f64, usize)>>,
    /// Predict-only advance per grid point (unsensed channel).
    drift: Vec<usize>,
}

fn build_plan(
    env: &ChannelEnv,
    grid: &BeliefGrid,
    rd: &RdParams,
    beta_grid: &BetaGrid,
    penalty: f64,
) -> Result<ChannelPlan, SolverError> {
    let s = env.model.state_count();
    let n_pts = grid.len();
    let mut imm = Vec::with_capacity(n_pts);
    let mut branches = Vec::with_capacity(n_pts);
    let mut drift = Vec::with_capacity(n_pts);
    let mut posterior = vec![0.0; s];

    for idx in 0..n_pts {
        let q = predict_probs(grid.point(idx), &env.model.transition);
        imm.push(immediate_cost_of_predicted(
            &q,
            env,
            rd,
            beta_grid,
            penalty,
            &BetaRule::MostLikelyAvailable,
        )?);
        drift.push(grid.nearest(&q));

        let mut b = Vec::with_capacity(s);
        for col in 0..s {
            let mut w = 0.0;
            for x in 0..s {
                posterior[x] = q[x] * env.kernel.row(x)[col];
                w += posterior[x];
            }
            if w <= 0.0 {
                continue;
            }
            for v in posterior.iter_mut() {
                *v /= w;
            }
            b.push((w, grid.nearest(&posterior)));
        }
        branches.push(b);
    }
    Ok(ChannelPlan {
        imm,
        branches,
        drift,
    })
}

/// Expected cost-to-go per stage and joint grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    horizon: usize,
    joint: usize,
    data: Vec<f64>, // stage-major, stage 1 first
}

impl ValueTable {
    /// `J_k` at joint grid point `idx`, stage `k` in `1..=horizon`.
    pub fn value(&self, stage: usize, idx: usize) -> f64 {
        self.data[(stage - 1) * self.joint + idx]
    }

    pub fn stage_values(&self, stage: usize) -> &[f64] {
        &self.data[(stage - 1) * self.joint..stage * self.joint]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn joint_points(&self) -> usize {
        self.joint
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Minimizing sensing decision per stage and joint grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    horizon: usize,
    joint: usize,
    data: Vec<SenseDecision>,
}

impl PolicyTable {
    pub fn decision(&self, stage: usize, idx: usize) -> SenseDecision {
        self.data[(stage - 1) * self.joint + idx]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn data(&self) -> &[SenseDecision] {
        &self.data
    }
}

/// A solved sensing policy with its value function and the grids needed to
/// look beliefs up.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySolution {
    pub n_channels: usize,
    pub horizon: usize,
    pub grids: Vec<BeliefGrid>,
    pub value: ValueTable,
    pub policy: PolicyTable,
}

/// Result of a policy lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyLookup {
    pub decision: SenseDecision,
    /// Set when the requested stage exceeded the horizon and the lookup
    /// clamped to the final stage.
    pub clamped: bool,
}

impl PolicySolution {
    /// Joint grid index of per-channel beliefs (nearest point per channel).
    pub fn joint_index(&self, beliefs: &[Belief]) -> usize {
        assert_eq!(beliefs.len(), self.n_channels, "one belief per channel");
        let mut idx = 0usize;
        for (grid, belief) in self.grids.iter().zip(beliefs) {
            idx = idx * grid.len() + grid.nearest(belief.probs());
        }
        idx
    }
}

/// Stored minimizing action for `beliefs` at stage `k` (1-based). Stages
/// beyond the horizon clamp to the final stage and set the flag.
pub fn policy_action(solution: &PolicySolution, stage: usize, beliefs: &[Belief]) -> PolicyLookup {
    debug_assert!(stage >= 1);
    let clamped = stage > solution.horizon;
    let stage = stage.min(solution.horizon);
    let idx = solution.joint_index(beliefs);
    PolicyLookup {
        decision: solution.policy.decision(stage, idx),
        clamped,
    }
}

/// Backward induction over the joint belief grid.
///
/// Stage `K` carries the immediate cost only; earlier stages add the
/// expected continuation read at the nearest grid point of each posterior.
/// Actions: `[Sense(0), NoSense]` for one channel, `[Sense(0..N)]` for
/// several; ties in the minimum keep the earlier action.
pub fn solve_finite_horizon(
    envs: &[ChannelEnv],
    rd: &RdParams,
    beta_grid: &BetaGrid,
    params: &SolverParams,
) -> Result<PolicySolution, SolverError> {
    let n = envs.len();
    if n == 0 {
        return Err(SolverError::BadConfig("need at least one channel"));
    }
    if params.horizon == 0 {
        return Err(SolverError::BadConfig("horizon must be at least 1"));
    }

    let grids: Vec<BeliefGrid> = envs
        .iter()
        .map(|e| BeliefGrid::new(params.resolution, e.model.state_count()))
        .collect::<Result<_, _>>()?;

    let mut joint: usize = 1;
    for g in &grids {
        joint = joint
            .checked_mul(g.len())
            .ok_or(SolverError::GridTooLarge {
                points: usize::MAX,
                cap: params.max_joint_points,
            })?;
    }
    if joint > params.max_joint_points {
        return Err(SolverError::GridTooLarge {
            points: joint,
            cap: params.max_joint_points,
        });
    }

    let plans: Vec<ChannelPlan> = envs
        .iter()
        .zip(&grids)
        .map(|(e, g)| build_plan(e, g, rd, beta_grid, params.penalty))
        .collect::<Result<_, _>>()?;

    // strides for the row-major joint index
    let mut strides = vec![1usize; n];
    for c in (0..n.saturating_sub(1)).rev() {
        strides[c] = strides[c + 1] * grids[c + 1].len();
    }

    let actions: Vec<SenseDecision> = if n == 1 {
        vec![SenseDecision::Sense(0), SenseDecision::NoSense]
    } else {
        (0..n).map(SenseDecision::Sense).collect()
    };

    let k = params.horizon;
    let mut value_data = vec![0.0f64; k * joint];
    let mut policy_data = vec![SenseDecision::NoSense; k * joint];
    let mut gidx = vec![0usize; n];

    // t = 0 is stage K; stage k lives at slice (k-1)
    for t in 0..k {
        let stage = k - t;
        let (head, tail) = value_data.split_at_mut(stage * joint);
        let cur = &mut head[(stage - 1) * joint..];
        let next = if t == 0 { &[][..] } else { &tail[..joint] };
        let pol = &mut policy_data[(stage - 1) * joint..stage * joint];

        for idx in 0..joint {
            let mut rem = idx;
            for c in 0..n {
                gidx[c] = rem / strides[c];
                rem %= strides[c];
            }
            let mut best = f64::INFINITY;
            let mut best_a = actions[0];
            for &a in &actions {
                let cost = match a {
                    SenseDecision::Sense(c) => {
                        let mut cost = plans[c].imm[gidx[c]];
                        if t > 0 {
                            let mut base = 0usize;
                            for m in 0..n {
                                if m != c {
                                    base += plans[m].drift[gidx[m]] * strides[m];
                                }
                            }
                            for &(w, nxt) in &plans[c].branches[gidx[c]] {
                                cost += w * next[base + nxt * strides[c]];
                            }
                        }
                        cost
                    }
                    SenseDecision::NoSense => {
                        let mut cost = params.penalty;
                        if t > 0 {
                            let mut base = 0usize;
                            for m in 0..n {
                                base += plans[m].drift[gidx[m]] * strides[m];
                            }
                            cost += next[base];
                        }
                        cost
                    }
                };
                if cost < best {
                    best = cost;
                    best_a = a;
                }
            }
            debug_assert!(best.is_finite());
            cur[idx] = best;
            pol[idx] = best_a;
        }
    }

    Ok(PolicySolution {
        n_channels: n,
        horizon: k,
        grids,
        value: ValueTable {
            horizon: k,
            joint,
            data: value_data,
        },
        policy: PolicyTable {
            horizon: k,
            joint,
            data: policy_data,
        },
    })
}

/// Rebuild a solution from its stored parts (policy artifacts).
pub fn solution_from_parts(
    n_channels: usize,
    horizon: usize,
    grids: Vec<BeliefGrid>,
    value_data: Vec<f64>,
    policy_data: Vec<SenseDecision>,
) -> Result<PolicySolution, SolverError> {
    if grids.len() != n_channels || n_channels == 0 || horizon == 0 {
        return Err(SolverError::BadConfig("inconsistent solution parts"));
    }
    let joint: usize = grids.iter().map(|g| g.len()).product();
    if value_data.len() != horizon * joint || policy_data.len() != horizon * joint {
        return Err(SolverError::BadConfig("table size mismatch"));
    }
    Ok(PolicySolution {
        n_channels,
        horizon,
        grids,
        value: ValueTable {
            horizon,
            joint,
            data: value_data,
        },
        policy: PolicyTable {
            horizon,
            joint,
            data: policy_data,
        },
    })
}
