//! # cogvid-core
//!
//! Building blocks for opportunistic-spectrum video transmission studies:
//!
//! - [`rd`]: closed-form source/channel distortion and optimal intra
//!   refreshing rate selection over a quantized rate grid.
//! - [`channel`]: S-state Markov channels (quantized fading gains plus a
//!   primary-user "busy" state): transition-matrix construction, stationary
//!   distribution, state sampling, and a gain-to-packet-loss generator.
//! - [`sensing`]: spectrum sensor model (false alarm / miss, analytic ROC),
//!   receiver gain-quantization probabilities, and the end-of-slot
//!   acknowledgment observation kernel.
//! - [`belief`]: Bayesian information-state tracking (HMM forward filter)
//!   over the channel state.
//! - [`solver`]: finite-horizon POMDP value iteration on a belief-simplex
//!   grid with policy extraction (which channel to sense).
//! - [`sim`]: the slot-by-slot transmission simulator, the comparison
//!   policies, and per-episode metrics.
//! - [`stats`]: Student-t confidence intervals for seed aggregation.
//!
//! The crate is `no_std` (alloc only) and fully deterministic: all sampling
//! goes through the explicit [`rng::SimRng`] stream owned by one episode.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod belief;
pub mod channel;
pub mod math;
pub mod rd;
pub mod rng;
pub mod sensing;
pub mod sim;
pub mod solver;
pub mod stats;
