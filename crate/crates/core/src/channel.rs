//! S-state Markov channel model.
//!
//! States `0..S-1` are quantized fading-gain levels (available for secondary
//! use); state `S-1` is "busy", occupied by the primary network. The chain is described by an `S x S` row-stochastic transition
//! matrix; per-state packet loss ratios drive the distortion model.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::math;
use crate::rng::SimRng;

/// Row sums of a transition matrix must close to 1 within this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Residual tolerance for the stationary distribution, `||pi A - pi||_inf`.
pub const STATIONARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("transition row {row} sums to {sum}, not 1")]
    RowNotStochastic { row: usize, sum: f64 },
    #[error("transition entry ({row}, {col}) = {value} is negative or not finite")]
    BadEntry { row: usize, col: usize, value: f64 },
    #[error("{kind} probabilities sum to {sum} > 1")]
    MassExceedsOne { kind: &'static str, sum: f64 },
    #[error("with S = 2 there is no other available state; p_stay + p_avail_to_busy must equal 1 (leftover {leftover})")]
    TwoStateLeftover { leftover: f64 },
    #[error("chain is reducible; states {unreachable:?} do not communicate with state 0")]
    Reducible { unreachable: Vec<usize> },
    #[error("stationary solve failed: {0}")]
    SingularSystem(&'static str),
    #[error("stationary residual {residual} exceeds {STATIONARY_TOL}")]
    ResidualTooLarge { residual: f64 },
    #[error("invalid channel model: {0}")]
    InvalidModel(&'static str),
}

/// Row-stochastic `S x S` state transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self, ChannelError> {
        if n < 1 || data.len() != n * n {
            return Err(ChannelError::InvalidModel("matrix size mismatch"));
        }
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..n {
                let v = data[i * n + j];
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(ChannelError::BadEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                sum += v;
            }
            if math::abs(sum - 1.0) > ROW_SUM_TOL {
                return Err(ChannelError::RowNotStochastic { row: i, sum });
            }
        }
        Ok(Self { n, data })
    }

    /// Convenience constructor from row slices (used heavily in tests).
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, ChannelError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(ChannelError::InvalidModel("matrix size mismatch"));
            }
            data.extend_from_slice(r);
        }
        Self::new(n, data)
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }
}

/// Build the three-scalar transition matrix used by the experiments.
///
/// Every available state keeps `p_stay` for itself and sends
/// `p_avail_to_busy` to the busy state; the leftover mass is split uniformly
/// over the other `S-2` available states. The busy state keeps `p_busy_stay`
/// and splits the rest uniformly over the `S-1` available states.
pub fn build_transition(
    s: usize,
    p_stay: f64,
    p_avail_to_busy: f64,
    p_busy_stay: f64,
) -> Result<TransitionMatrix, ChannelError> {
    if s < 2 {
        return Err(ChannelError::InvalidModel("need at least 2 states"));
    }
    for &(v, name) in &[
        (p_stay, "p_stay"),
        (p_avail_to_busy, "p_avail_to_busy"),
        (p_busy_stay, "p_busy_stay"),
    ] {
        if !(0.0..=1.0).contains(&v) || v.is_nan() {
            let _ = name;
            return Err(ChannelError::InvalidModel(
                "probabilities must lie in [0, 1]",
            ));
        }
    }
    let leftover = 1.0 - p_stay - p_avail_to_busy;
    if leftover < -ROW_SUM_TOL {
        return Err(ChannelError::MassExceedsOne {
            kind: "available-state",
            sum: p_stay + p_avail_to_busy,
        });
    }
    if s == 2 && math::abs(leftover) > ROW_SUM_TOL {
        return Err(ChannelError::TwoStateLeftover { leftover });
    }

    let busy = s - 1;
    let mut data = vec![0.0; s * s];
    for i in 0..busy {
        let spread = if s > 2 {
            leftover.max(0.0) / (s - 2) as f64
        } else {
            0.0
        };
        for j in 0..busy {
            data[i * s + j] = if i == j { p_stay } else { spread };
        }
        data[i * s + busy] = p_avail_to_busy;
        // close the row exactly so downstream row-sum checks see 1
        let sum: f64 = data[i * s..(i + 1) * s].iter().sum();
        data[i * s + i] += 1.0 - sum;
    }
    let revive = (1.0 - p_busy_stay) / (s - 1) as f64;
    for j in 0..busy {
        data[busy * s + j] = revive;
    }
    data[busy * s + busy] = p_busy_stay;
    let sum: f64 = data[busy * s..].iter().sum();
    data[busy * s + busy] += 1.0 - sum;

    TransitionMatrix::new(s, data)
}

fn reachable(a: &TransitionMatrix, from: usize, transpose: bool) -> Vec<bool> {
    let n = a.size();
    let mut seen = vec![false; n];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            let p = if transpose { a.get(j, i) } else { a.get(i, j) };
            if p > 0.0 && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

/// Unique stationary distribution `pi` with `pi A = pi`, `sum(pi) = 1`.
///
/// The chain must be irreducible (checked by a reachability scan); the
/// linear system is solved by Gaussian elimination with partial pivoting and
/// the residual is verified against [`STATIONARY_TOL`].
pub fn stationary_distribution(a: &TransitionMatrix) -> Result<Vec<f64>, ChannelError> {
    let n = a.size();
    let fwd = reachable(a, 0, false);
    let bwd = reachable(a, 0, true);
    let unreachable: Vec<usize> = (0..n).filter(|&i| !fwd[i] || !bwd[i]).collect();
    if !unreachable.is_empty() {
        return Err(ChannelError::Reducible { unreachable });
    }

    // Solve pi (A - I) = 0 with the last equation replaced by sum(pi) = 1.
    // Unknowns are the components of pi; equation j reads
    // sum_i pi_i (A_ij - d_ij) = 0.
    let mut m = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    for j in 0..n - 1 {
        for i in 0..n {
            m[j * n + i] = a.get(i, j) - if i == j { 1.0 } else { 0.0 };
        }
    }
    for i in 0..n {
        m[(n - 1) * n + i] = 1.0;
    }
    rhs[n - 1] = 1.0;

    // Gaussian elimination with partial pivoting.
    for col in 0..n {
        let mut piv = col;
        let mut best = math::abs(m[col * n + col]);
        for r in col + 1..n {
            let v = math::abs(m[r * n + col]);
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < 1e-14 {
            return Err(ChannelError::SingularSystem("pivot vanished"));
        }
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
            }
            rhs.swap(col, piv);
        }
        for r in col + 1..n {
            let f = m[r * n + col] / m[col * n + col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[r * n + c] -= f * m[col * n + c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut pi = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for c in row + 1..n {
            acc -= m[row * n + c] * pi[c];
        }
        pi[row] = acc / m[row * n + row];
    }

    // clean tiny negative round-off and renormalize
    let mut sum = 0.0;
    for v in pi.iter_mut() {
        if *v < 0.0 && *v > -1e-12 {
            *v = 0.0;
        }
        sum += *v;
    }
    for v in pi.iter_mut() {
        *v /= sum;
    }

    let mut residual = 0.0f64;
    for j in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            acc += pi[i] * a.get(i, j);
        }
        residual = residual.max(math::abs(acc - pi[j]));
    }
    if residual > STATIONARY_TOL {
        return Err(ChannelError::ResidualTooLarge { residual });
    }
    Ok(pi)
}

/// Next state from one uniform draw by inverse CDF over the current row.
#[inline]
pub fn step(current: usize, a: &TransitionMatrix, rng: &mut SimRng) -> usize {
    next_state_from_uniform(a.row(current), rng.next_f64())
}

/// Inverse-CDF walk: the first state whose cumulative mass exceeds `u`.
#[inline]
pub(crate) fn next_state_from_uniform(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (j, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    row.len() - 1 // float residue; the row sums to 1
}

/// Packet loss ratio from a linear SNR `gamma` for an uncoded packet of
/// `packet_bits` bits: BER = Q(sqrt(2 gamma)), loss = 1 - (1 - BER)^bits,
/// clamped to [0, 0.999] so accessed-slot distortion stays finite
/// (loss 1 is reserved for the no-access/collision semantics).
pub fn loss_from_gain(gamma: f64, packet_bits: u32) -> f64 {
    debug_assert!(gamma >= 0.0);
    let ber = math::gaussian_q(math::sqrt(2.0 * gamma));
    let p = 1.0 - math::exp(packet_bits as f64 * math::log1p(-ber));
    p.clamp(0.0, 0.999)
}

/// One channel: quantized gain levels, per-state packet loss, and the
/// transition matrix, plus informational bandwidth/slot metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    /// Gain levels (linear SNR) of states `0..S-1`, strictly increasing.
    pub gains: Vec<f64>,
    /// Packet loss ratio per available state, each in [0, 1).
    pub loss: Vec<f64>,
    pub transition: TransitionMatrix,
    /// Bandwidth in Hz (informational; no rate computation uses it).
    pub bandwidth_hz: f64,
    /// Slot length in seconds (informational).
    pub slot_secs: f64,
}

impl ChannelModel {
    pub fn new(
        gains: Vec<f64>,
        loss: Vec<f64>,
        transition: TransitionMatrix,
        bandwidth_hz: f64,
        slot_secs: f64,
    ) -> Result<Self, ChannelError> {
        let s = transition.size();
        if s < 2 {
            return Err(ChannelError::InvalidModel("need at least 2 states"));
        }
        if gains.len() != s - 1 {
            return Err(ChannelError::InvalidModel("need S-1 gain levels"));
        }
        if loss.len() != s - 1 {
            return Err(ChannelError::InvalidModel("need S-1 loss entries"));
        }
        if gains.iter().any(|g| !g.is_finite() || *g <= 0.0) {
            return Err(ChannelError::InvalidModel("gains must be positive"));
        }
        if gains.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(ChannelError::InvalidModel(
                "gains must be strictly increasing",
            ));
        }
        if loss.iter().any(|p| !(0.0..1.0).contains(p)) {
            return Err(ChannelError::InvalidModel("loss ratios must lie in [0, 1)"));
        }
        if !(bandwidth_hz > 0.0) || !(slot_secs > 0.0) {
            return Err(ChannelError::InvalidModel(
                "bandwidth and slot must be positive",
            ));
        }
        Ok(Self {
            gains,
            loss,
            transition,
            bandwidth_hz,
            slot_secs,
        })
    }

    #[inline]
    pub fn state_count(&self) -> usize {
        self.transition.size()
    }

    /// Index of the primary-occupied state.
    #[inline]
    pub fn busy_state(&self) -> usize {
        self.state_count() - 1
    }

    #[inline]
    pub fn is_busy(&self, state: usize) -> bool {
        state == self.busy_state()
    }

    /// Default gain ladder: `n` levels equally spaced on [0.5, 4.0].
    pub fn default_gains(n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![0.5];
        }
        (0..n)
            .map(|i| 0.5 + i as f64 * (4.0 - 0.5) / (n - 1) as f64)
            .collect()
    }

    /// Default loss table: `p_i = 0.2 * 2^-(i-1)` for level i = 1..n.
    pub fn default_loss(n: usize) -> Vec<f64> {
        (0..n).map(|i| 0.2 * math::powf(2.0, -(i as f64))).collect()
    }
}
