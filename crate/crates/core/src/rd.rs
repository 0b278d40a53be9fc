//! Rate-distortion model for intra-refresh selection.
//!
//! Total end-to-end video distortion splits into a source term (quantization
//! noise, grows with the intra refreshing rate `beta`) and a channel term
//! (loss-induced error propagation, shrinks with `beta`). The tradeoff is
//! resolved by exhaustive search over a quantized `beta` grid.
//!
//! Infinite channel distortion (packet loss ratio 1, i.e. a busy or
//! unaccessed channel) is represented by IEEE `f64::INFINITY`, which
//! propagates through sums and comparisons.
//!
//! ```
//! use cogvid_core::rd::{optimal_beta, BetaGrid, RdParams};
//!
//! let rd = RdParams::default();
//! let grid = BetaGrid::percent();
//! // at 10% packet loss the best rate trades a little source quality
//! // against error propagation
//! let choice = optimal_beta(&rd, 0.1, &grid).unwrap();
//! assert_eq!(choice.beta, 0.17);
//! assert!((choice.distortion - 73.2766).abs() < 1e-4);
//! ```

use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RdError {
    #[error("intra refreshing rate {beta} outside [0, 1]")]
    BetaOutOfRange { beta: f64 },
    #[error("packet loss ratio {p} outside [0, 1]")]
    LossOutOfRange { p: f64 },
    #[error("channel distortion denominator 1 - b + b*beta = {denom} not positive (b = {b}, beta = {beta})")]
    Singular { b: f64, beta: f64, denom: f64 },
    #[error("invalid rate-distortion parameters: {0}")]
    InvalidParams(&'static str),
    #[error("invalid beta grid: {0}")]
    InvalidGrid(&'static str),
}

/// Rate-distortion constants of one encoded sequence.
///
/// `ds0`/`ds1` are the all-inter and all-intra source distortions at the
/// target rate; `eta` is the sequence constant of the source model; `a` is
/// the energy loss ratio of the encoder filter; `b` describes motion
/// randomness; `efd` is the mean frame difference driving error propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct RdParams {
    /// Target source coding rate in bits/s (informational only).
    pub target_rate: f64,
    pub ds0: f64,
    pub ds1: f64,
    pub eta: f64,
    pub a: f64,
    pub b: f64,
    pub efd: f64,
}

impl Default for RdParams {
    /// Constants used throughout the experiment presets.
    fn default() -> Self {
        Self {
            target_rate: 1.0e6,
            ds0: 74.0,
            ds1: 124.0,
            eta: 1.4,
            a: 0.01,
            b: 1.0,
            efd: 100.0,
        }
    }
}

impl RdParams {
    pub fn validate(&self) -> Result<(), RdError> {
        let all = [
            self.target_rate,
            self.ds0,
            self.ds1,
            self.eta,
            self.a,
            self.b,
            self.efd,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(RdError::InvalidParams("all constants must be finite"));
        }
        if self.ds0 < 0.0 || self.ds1 < self.ds0 {
            return Err(RdError::InvalidParams("need ds1 >= ds0 >= 0"));
        }
        if self.eta <= 0.0 {
            return Err(RdError::InvalidParams("eta must be > 0"));
        }
        if self.a <= 0.0 || self.a > 1.0 {
            return Err(RdError::InvalidParams("a must be in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(RdError::InvalidParams("b must be in [0, 1]"));
        }
        if self.efd < 0.0 {
            return Err(RdError::InvalidParams("efd must be >= 0"));
        }
        if self.target_rate <= 0.0 {
            return Err(RdError::InvalidParams("target_rate must be > 0"));
        }
        Ok(())
    }
}

/// Quantized intra-refresh action set: strictly increasing values in (0, 1].
///
/// Zero is excluded by construction, which keeps the channel-distortion
/// denominator positive even for fully random motion (`b = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct BetaGrid {
    values: Vec<f64>,
}

impl BetaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self, RdError> {
        if values.is_empty() {
            return Err(RdError::InvalidGrid("grid must be nonempty"));
        }
        for w in values.windows(2) {
            if !(w[0] < w[1]) {
                return Err(RdError::InvalidGrid("grid must be strictly increasing"));
            }
        }
        let lo = values[0];
        let hi = values[values.len() - 1];
        if !(lo > 0.0 && hi <= 1.0) || !lo.is_finite() {
            return Err(RdError::InvalidGrid("grid values must lie in (0, 1]"));
        }
        Ok(Self { values })
    }

    /// The default grid {0.01, 0.02, ..., 1.00}. Contains the constant
    /// baseline beta = 0.1 and avoids the b = 1 singularity at beta = 0.
    pub fn percent() -> Self {
        Self {
            values: (1..=100).map(|i| i as f64 / 100.0).collect(),
        }
    }

    /// Uniform grid {1/n, 2/n, ..., 1}.
    pub fn uniform(n: usize) -> Result<Self, RdError> {
        if n == 0 {
            return Err(RdError::InvalidGrid("grid must be nonempty"));
        }
        Ok(Self {
            values: (1..=n).map(|i| i as f64 / n as f64).collect(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_beta(&self) -> f64 {
        self.values[0]
    }

    pub fn contains(&self, beta: f64) -> bool {
        self.values.contains(&beta)
    }
}

/// Source + channel + total distortion of one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionBreakdown {
    pub source: f64,
    /// May be `f64::INFINITY` when the loss ratio is 1.
    pub channel: f64,
    pub total: f64,
}

/// Grid point minimizing the total distortion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaChoice {
    pub beta: f64,
    pub distortion: f64,
    /// Set when every grid point is equally (infinitely) bad, i.e. p = 1.
    pub degenerate: bool,
}

/// Quantization distortion at intra refreshing rate `beta`.
///
/// Evaluated literally; for eta > 1 the curve dips below `ds0` at small
/// `beta` and no clamping is applied.
pub fn source_distortion(params: &RdParams, beta: f64) -> Result<f64, RdError> {
    if !(0.0..=1.0).contains(&beta) || beta.is_nan() {
        return Err(RdError::BetaOutOfRange { beta });
    }
    Ok(params.ds0 + beta * (1.0 - params.eta + params.eta * beta) * (params.ds1 - params.ds0))
}

/// Loss-induced distortion at packet loss ratio `p` and rate `beta`.
///
/// Returns `f64::INFINITY` for p = 1 (the p/(1-p) asymptote).
pub fn channel_distortion(params: &RdParams, p: f64, beta: f64) -> Result<f64, RdError> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(RdError::LossOutOfRange { p });
    }
    if !(0.0..=1.0).contains(&beta) || beta.is_nan() {
        return Err(RdError::BetaOutOfRange { beta });
    }
    let denom = 1.0 - params.b + params.b * beta;
    if denom <= 0.0 {
        return Err(RdError::Singular {
            b: params.b,
            beta,
            denom,
        });
    }
    if p >= 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok((params.a / denom) * (p / (1.0 - p)) * params.efd)
}

/// Source plus channel distortion; infinite when the channel term is.
pub fn total_distortion(params: &RdParams, p: f64, beta: f64) -> Result<f64, RdError> {
    Ok(distortion_breakdown(params, p, beta)?.total)
}

/// All three distortion terms of one `(p, beta)` operating point.
pub fn distortion_breakdown(
    params: &RdParams,
    p: f64,
    beta: f64,
) -> Result<DistortionBreakdown, RdError> {
    let source = source_distortion(params, beta)?;
    let channel = channel_distortion(params, p, beta)?;
    Ok(DistortionBreakdown {
        source,
        channel,
        total: source + channel,
    })
}

/// Grid point minimizing the total distortion; ties break toward the
/// smaller `beta` (better source R-D efficiency at equal total distortion).
///
/// For p = 1 every grid point is infinitely bad; the smallest grid value is
/// returned with the `degenerate` flag set.
pub fn optimal_beta(params: &RdParams, p: f64, grid: &BetaGrid) -> Result<BetaChoice, RdError> {
    let mut best_beta = grid.min_beta();
    let mut best = f64::INFINITY;
    for &beta in grid.values() {
        let d = total_distortion(params, p, beta)?;
        // strict improvement only: the grid is ascending, so the first
        // minimum seen is the smallest beta among ties
        if d < best {
            best = d;
            best_beta = beta;
        }
    }
    Ok(BetaChoice {
        beta: best_beta,
        distortion: best,
        degenerate: !best.is_finite(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent oracle: the two closed forms written out directly, used to
    // cross-check the library path in the grid-search tests.
    fn oracle_total(pr: &RdParams, p: f64, beta: f64) -> f64 {
        let src = pr.ds0 + beta * (1.0 - pr.eta + pr.eta * beta) * (pr.ds1 - pr.ds0);
        let ch = if p >= 1.0 {
            f64::INFINITY
        } else {
            pr.a / (1.0 - pr.b + pr.b * beta) * (p / (1.0 - p)) * pr.efd
        };
        src + ch
    }

    fn oracle_argmin(pr: &RdParams, p: f64, grid: &BetaGrid) -> (f64, f64) {
        let mut best = (grid.values()[0], f64::INFINITY);
        for &b in grid.values() {
            let d = oracle_total(pr, p, b);
            if d < best.1 {
                best = (b, d);
            }
        }
        best
    }

    #[test]
    fn source_distortion_endpoints_and_curve() {
        let pr = RdParams::default();
        assert!((source_distortion(&pr, 0.0).unwrap() - 74.0).abs() < 1e-9);
        assert!((source_distortion(&pr, 1.0).unwrap() - 124.0).abs() < 1e-9);
        assert!((source_distortion(&pr, 0.1).unwrap() - 72.7).abs() < 1e-9);
        assert!(matches!(
            source_distortion(&pr, 1.2),
            Err(RdError::BetaOutOfRange { .. })
        ));
        assert!(source_distortion(&pr, f64::NAN).is_err());
    }

    #[test]
    fn channel_distortion_points() {
        let pr = RdParams::default();
        assert_eq!(channel_distortion(&pr, 0.0, 0.3).unwrap(), 0.0);
        // (0.01/0.1) * (0.1/0.9) * 100 = 10/9
        assert!((channel_distortion(&pr, 0.1, 0.1).unwrap() - 10.0 / 9.0).abs() < 1e-9);
        assert_eq!(channel_distortion(&pr, 1.0, 0.5).unwrap(), f64::INFINITY);
        // b = 1, beta = 0 hits the singular denominator
        assert!(matches!(
            channel_distortion(&pr, 0.1, 0.0),
            Err(RdError::Singular { .. })
        ));
        assert!(matches!(
            channel_distortion(&pr, -0.1, 0.5),
            Err(RdError::LossOutOfRange { .. })
        ));
    }

    #[test]
    fn total_distortion_points() {
        let pr = RdParams::default();
        let d = total_distortion(&pr, 0.1, 0.1).unwrap();
        assert!((d - (72.7 + 10.0 / 9.0)).abs() < 1e-9);
        assert!((d - 73.811111).abs() < 1e-6);
        assert_eq!(total_distortion(&pr, 1.0, 0.2).unwrap(), f64::INFINITY);
        assert!(total_distortion(&pr, 0.0, 0.0).is_err()); // b = 1 singular at beta = 0

        let mut low_motion = pr.clone();
        low_motion.b = 0.5;
        assert!((total_distortion(&low_motion, 0.0, 0.0).unwrap() - 74.0).abs() < 1e-9);
    }

    #[test]
    fn breakdown_is_consistent() {
        let pr = RdParams::default();
        let b = distortion_breakdown(&pr, 0.2, 0.25).unwrap();
        assert!((b.total - (b.source + b.channel)).abs() < 1e-12);
    }

    #[test]
    fn optimal_beta_default_grid() {
        let pr = RdParams::default();
        let grid = BetaGrid::percent();

        let c = optimal_beta(&pr, 0.1, &grid).unwrap();
        assert_eq!(c.beta, 0.17);
        let (ob, od) = oracle_argmin(&pr, 0.1, &grid);
        assert_eq!(c.beta, ob);
        assert!((c.distortion - od).abs() < 1e-9);
        assert!((c.distortion - 73.276).abs() < 1e-3);
        assert!(!c.degenerate);

        // loss-free channel: stationary point (eta-1)/(2*eta) = 0.142857
        let c0 = optimal_beta(&pr, 0.0, &grid).unwrap();
        assert_eq!(c0.beta, 0.14);
        assert!((c0.distortion - 72.572).abs() < 1e-9);

        let c1 = optimal_beta(&pr, 1.0, &grid).unwrap();
        assert_eq!(c1.beta, 0.01);
        assert_eq!(c1.distortion, f64::INFINITY);
        assert!(c1.degenerate);
    }

    #[test]
    fn optimal_beta_matches_oracle_on_random_instances() {
        let mut rng = crate::rng::SimRng::new(0xBE7A);
        for _ in 0..100 {
            let p = rng.next_f64() * 0.99;
            let n = 3 + rng.uniform_index(197);
            let grid = BetaGrid::uniform(n).unwrap();
            let pr = RdParams::default();
            let got = optimal_beta(&pr, p, &grid).unwrap();
            let (want_beta, want_d) = oracle_argmin(&pr, p, &grid);
            assert_eq!(got.beta, want_beta, "p={p} n={n}");
            assert!((got.distortion - want_d).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(BetaGrid::new(alloc::vec![0.1, 0.5, 1.0]).is_ok());
        assert!(BetaGrid::new(alloc::vec![]).is_err());
        assert!(BetaGrid::new(alloc::vec![0.0, 0.5]).is_err());
        assert!(BetaGrid::new(alloc::vec![0.5, 0.5]).is_err());
        assert!(BetaGrid::new(alloc::vec![0.5, 1.2]).is_err());
        assert!(BetaGrid::percent().contains(0.1));
    }

    #[test]
    fn params_validation() {
        assert!(RdParams::default().validate().is_ok());
        let mut bad = RdParams::default();
        bad.ds1 = 10.0; // below ds0
        assert!(bad.validate().is_err());
        let mut bad = RdParams::default();
        bad.b = 1.5;
        assert!(bad.validate().is_err());
    }
}
