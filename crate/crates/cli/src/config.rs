//! Experiment configuration: TOML schema, defaults, validation, and the
//! mapping onto the core model types.
//!
//! Every field is optional in the file; an empty file yields the default
//! experiment (one 5-state channel, epsilon 0.6, sigma 0.1, horizon 200,
//! 50 seeds). Validation errors name the offending key.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use cogvid_core::channel::{build_transition, ChannelModel};
use cogvid_core::rd::{BetaGrid, RdParams};
use cogvid_core::sensing::{ChannelEnv, RocModel, SensorDesign};
use cogvid_core::sim::MethodId;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {key}: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        reason: reason.into(),
    }
}

/// Rate-distortion constants plus the quantized rate grid step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RdConfig {
    pub target_rate: f64,
    pub ds0: f64,
    pub ds1: f64,
    pub eta: f64,
    pub a: f64,
    pub b: f64,
    pub efd: f64,
    /// Grid step of the intra refreshing rate action set (0, step, .., 1].
    pub beta_step: f64,
}

impl Default for RdConfig {
    fn default() -> Self {
        let rd = RdParams::default();
        Self {
            target_rate: rd.target_rate,
            ds0: rd.ds0,
            ds1: rd.ds1,
            eta: rd.eta,
            a: rd.a,
            b: rd.b,
            efd: rd.efd,
            beta_step: 0.01,
        }
    }
}

/// One channel: state count and the three-scalar transition structure,
/// with optional explicit gain and loss tables. A channel may override the
/// experiment-level sensor values (`epsilon` or `zeta`, and `sigma`);
/// unset fields inherit `[sensor]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub states: usize,
    pub p_stay: f64,
    pub p_to_busy: f64,
    pub p_busy_stay: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gains: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub bandwidth_hz: f64,
    pub slot_secs: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            states: 5,
            p_stay: 0.85,
            p_to_busy: 0.05,
            p_busy_stay: 0.1,
            gains: None,
            loss: None,
            epsilon: None,
            zeta: None,
            sigma: None,
            bandwidth_hz: 1.0e6,
            slot_secs: 0.1,
        }
    }
}

/// Sensor design: give `epsilon` (the miss probability follows from the
/// ROC) or `zeta` (the collision budget; the operating point is solved for
/// `delta = zeta`), not both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    pub kappa: f64,
    pub sigma: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            epsilon: None,
            zeta: None,
            kappa: 3.0,
            sigma: 0.1,
        }
    }
}

pub const DEFAULT_EPSILON: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub horizon: usize,
    pub seeds: usize,
    pub base_seed: u64,
    /// Method labels; defaults depend on the channel count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<String>>,
    /// Rate used by the constant-rate baselines.
    pub const_beta: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            horizon: 200,
            seeds: 50,
            base_seed: 1,
            methods: None,
            const_beta: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Belief-grid resolution per channel; defaults to 10 (one channel)
    /// or 8 (two channels).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    /// Cost of a no-access or collision slot.
    pub penalty: f64,
    pub max_joint_points: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            resolution: None,
            penalty: 500.0,
            max_joint_points: 4_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// One of `states`, `sigma`, `epsilon`, or `p_stay` / `p_to_busy` /
    /// `p_busy_stay`, optionally prefixed `channel1.` / `channel2.`.
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub rd: RdConfig,
    pub channels: Vec<ChannelConfig>,
    pub sensor: SensorConfig,
    pub run: RunConfig,
    pub solver: SolverConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: "custom".into(),
            rd: RdConfig::default(),
            channels: vec![ChannelConfig::default()],
            sensor: SensorConfig::default(),
            run: RunConfig::default(),
            solver: SolverConfig::default(),
            sweep: None,
            output: OutputConfig::default(),
        }
    }
}

/// Load and validate a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text, &path.display().to_string())
}

pub fn parse_config(text: &str, origin: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// The sweepable parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// State count of every channel.
    States,
    /// Estimation noise of every channel.
    Sigma,
    /// Sensor operating point of every channel.
    Epsilon,
    PStay(usize),
    PToBusy(usize),
    PBusyStay(usize),
}

impl SweepParam {
    pub fn parse(s: &str) -> Option<SweepParam> {
        let (channel, rest) = if let Some(r) = s.strip_prefix("channel1.") {
            (0usize, r)
        } else if let Some(r) = s.strip_prefix("channel2.") {
            (1usize, r)
        } else {
            (0usize, s)
        };
        match rest {
            "states" => Some(SweepParam::States),
            "sigma" => Some(SweepParam::Sigma),
            "epsilon" => Some(SweepParam::Epsilon),
            "p_stay" => Some(SweepParam::PStay(channel)),
            "p_to_busy" => Some(SweepParam::PToBusy(channel)),
            "p_busy_stay" => Some(SweepParam::PBusyStay(channel)),
            _ => None,
        }
    }
}

fn check_prob(key: String, v: f64) -> Result<(), ConfigError> {
    if !(0.0..=1.0).contains(&v) || v.is_nan() {
        return Err(invalid(key, format!("{v} is not a probability in [0, 1]")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.rd_params()
            .validate()
            .map_err(|e| invalid("rd", e.to_string()))?;
        if !(self.rd.beta_step > 0.0 && self.rd.beta_step <= 1.0) {
            return Err(invalid("rd.beta_step", "must lie in (0, 1]"));
        }

        if self.channels.is_empty() || self.channels.len() > 2 {
            return Err(invalid(
                "channels",
                format!("need 1 or 2 channels, got {}", self.channels.len()),
            ));
        }
        for (i, ch) in self.channels.iter().enumerate() {
            let key = |f: &str| format!("channels[{i}].{f}");
            if ch.states < 2 {
                return Err(invalid(key("states"), "need at least 2 states"));
            }
            check_prob(key("p_stay"), ch.p_stay)?;
            check_prob(key("p_to_busy"), ch.p_to_busy)?;
            check_prob(key("p_busy_stay"), ch.p_busy_stay)?;
            if ch.p_stay + ch.p_to_busy > 1.0 + 1e-12 {
                return Err(invalid(
                    key("p_stay"),
                    format!(
                        "p_stay + p_to_busy = {} exceeds 1",
                        ch.p_stay + ch.p_to_busy
                    ),
                ));
            }
            if let Some(g) = &ch.gains {
                if g.len() != ch.states - 1 {
                    return Err(invalid(key("gains"), "need states - 1 gain levels"));
                }
                if g.windows(2).any(|w| !(w[0] < w[1])) || g.iter().any(|v| *v <= 0.0) {
                    return Err(invalid(
                        key("gains"),
                        "must be positive and strictly increasing",
                    ));
                }
            }
            if let Some(l) = &ch.loss {
                if l.len() != ch.states - 1 {
                    return Err(invalid(key("loss"), "need states - 1 loss entries"));
                }
                if l.iter().any(|v| !(0.0..1.0).contains(v)) {
                    return Err(invalid(key("loss"), "entries must lie in [0, 1)"));
                }
            }
            if ch.epsilon.is_some() && ch.zeta.is_some() {
                return Err(invalid(key("epsilon"), "give epsilon or zeta, not both"));
            }
            if let Some(e) = ch.epsilon {
                check_prob(key("epsilon"), e)?;
            }
            if let Some(z) = ch.zeta {
                check_prob(key("zeta"), z)?;
                if z == 0.0 {
                    return Err(invalid(key("zeta"), "zeta = 0 leaves the channel unusable"));
                }
            }
            if let Some(s) = ch.sigma {
                if !(s >= 0.0) {
                    return Err(invalid(key("sigma"), "sigma must be >= 0"));
                }
            }
            if !(ch.bandwidth_hz > 0.0) || !(ch.slot_secs > 0.0) {
                return Err(invalid(
                    key("bandwidth_hz"),
                    "bandwidth and slot must be positive",
                ));
            }
        }

        if self.sensor.epsilon.is_some() && self.sensor.zeta.is_some() {
            return Err(invalid("sensor", "give epsilon or zeta, not both"));
        }
        if let Some(e) = self.sensor.epsilon {
            check_prob("sensor.epsilon".into(), e)?;
        }
        if let Some(z) = self.sensor.zeta {
            check_prob("sensor.zeta".into(), z)?;
            if z == 0.0 {
                return Err(invalid(
                    "sensor.zeta",
                    "zeta = 0 leaves the channel unusable",
                ));
            }
        }
        if !(self.sensor.kappa >= 1.0) {
            return Err(invalid("sensor.kappa", "must be >= 1"));
        }
        if !(self.sensor.sigma >= 0.0) {
            return Err(invalid("sensor.sigma", "sigma must be >= 0"));
        }

        if self.run.horizon == 0 {
            return Err(invalid("run.horizon", "must be at least 1"));
        }
        if self.run.seeds == 0 {
            return Err(invalid("run.seeds", "must be at least 1"));
        }
        let grid = self.beta_grid();
        if !grid
            .values()
            .iter()
            .any(|&v| (v - self.run.const_beta).abs() < 1e-9)
        {
            return Err(invalid(
                "run.const_beta",
                format!("{} is not on the beta grid", self.run.const_beta),
            ));
        }
        self.effective_methods()?;

        if let Some(r) = self.solver.resolution {
            if r == 0 {
                return Err(invalid("solver.resolution", "must be at least 1"));
            }
        }
        if !(self.solver.penalty > 0.0) {
            return Err(invalid("solver.penalty", "must be positive"));
        }

        if let Some(sweep) = &self.sweep {
            let param = SweepParam::parse(&sweep.param).ok_or_else(|| {
                invalid(
                    "sweep.param",
                    format!("unknown parameter {:?}", sweep.param),
                )
            })?;
            if sweep.values.is_empty() {
                return Err(invalid("sweep.values", "need at least one value"));
            }
            if matches!(param, SweepParam::PStay(c) | SweepParam::PToBusy(c) | SweepParam::PBusyStay(c) if c >= self.channels.len())
            {
                return Err(invalid("sweep.param", "channel index out of range"));
            }
            for &v in &sweep.values {
                self.check_sweep_value(param, v)
                    .map_err(|reason| invalid(format!("sweep.values ({})", sweep.param), reason))?;
            }
            // every sweep point must itself validate
            for &v in &sweep.values {
                let mut point = self.apply_sweep_value(v)?;
                point.sweep = None;
                point.validate()?;
            }
        }

        if self.output.dir.is_empty() {
            return Err(invalid("output.dir", "must not be empty"));
        }
        Ok(())
    }

    fn check_sweep_value(&self, param: SweepParam, v: f64) -> Result<(), String> {
        match param {
            SweepParam::States => {
                if v.fract() != 0.0 || !(2.0..=64.0).contains(&v) {
                    return Err(format!("states value {v} must be an integer >= 2"));
                }
            }
            SweepParam::Sigma => {
                if !(v >= 0.0) {
                    return Err(format!("sigma must be >= 0, got {v}"));
                }
            }
            SweepParam::Epsilon => {
                if !(0.0..=1.0).contains(&v) {
                    return Err(format!("epsilon must lie in [0, 1], got {v}"));
                }
            }
            SweepParam::PStay(_) | SweepParam::PToBusy(_) | SweepParam::PBusyStay(_) => {
                if !(0.0..=1.0).contains(&v) {
                    return Err(format!("probability must lie in [0, 1], got {v}"));
                }
            }
        }
        Ok(())
    }

    /// A copy of this config with the sweep parameter set to `value` (the
    /// sweep spec itself is preserved for reporting).
    pub fn apply_sweep_value(&self, value: f64) -> Result<ExperimentConfig, ConfigError> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| invalid("sweep", "no sweep configured"))?;
        let param = SweepParam::parse(&sweep.param).ok_or_else(|| {
            invalid(
                "sweep.param",
                format!("unknown parameter {:?}", sweep.param),
            )
        })?;
        let mut out = self.clone();
        match param {
            SweepParam::States => {
                for ch in &mut out.channels {
                    ch.states = value as usize;
                    ch.gains = None;
                    ch.loss = None;
                }
            }
            // the symmetric observation sweeps set every channel: the
            // experiment level changes and per-channel overrides clear
            SweepParam::Sigma => {
                out.sensor.sigma = value;
                for ch in &mut out.channels {
                    ch.sigma = None;
                }
            }
            SweepParam::Epsilon => {
                out.sensor.epsilon = Some(value);
                out.sensor.zeta = None;
                for ch in &mut out.channels {
                    ch.epsilon = None;
                    ch.zeta = None;
                }
            }
            SweepParam::PStay(c) => out.channels[c].p_stay = value,
            SweepParam::PToBusy(c) => out.channels[c].p_to_busy = value,
            SweepParam::PBusyStay(c) => out.channels[c].p_busy_stay = value,
        }
        Ok(out)
    }

    pub fn rd_params(&self) -> RdParams {
        RdParams {
            target_rate: self.rd.target_rate,
            ds0: self.rd.ds0,
            ds1: self.rd.ds1,
            eta: self.rd.eta,
            a: self.rd.a,
            b: self.rd.b,
            efd: self.rd.efd,
        }
    }

    pub fn beta_grid(&self) -> BetaGrid {
        let n = (1.0 / self.rd.beta_step).round() as usize;
        BetaGrid::uniform(n.max(1)).expect("validated step")
    }

    /// Snap the configured constant rate onto the grid.
    pub fn const_beta_on_grid(&self) -> f64 {
        let grid = self.beta_grid();
        let mut best = grid.min_beta();
        let mut dist = f64::INFINITY;
        for &v in grid.values() {
            let d = (v - self.run.const_beta).abs();
            if d < dist {
                dist = d;
                best = v;
            }
        }
        best
    }

    pub fn effective_resolution(&self) -> usize {
        self.solver
            .resolution
            .unwrap_or(if self.channels.len() == 1 { 10 } else { 8 })
    }

    pub fn effective_methods(&self) -> Result<Vec<MethodId>, ConfigError> {
        let beta = self.const_beta_on_grid();
        let names: Vec<String> = match &self.run.methods {
            Some(m) => m.clone(),
            None => {
                if self.channels.len() == 1 {
                    ["oracle", "belief-map", "last-ack", "const-beta"]
                        .iter()
                        .map(|s| s.to_string())
                        .collect()
                } else {
                    ["pomdp", "random-const-beta", "oracle-channel"]
                        .iter()
                        .map(|s| s.to_string())
                        .collect()
                }
            }
        };
        if names.is_empty() {
            return Err(invalid("run.methods", "need at least one method"));
        }
        names
            .iter()
            .map(|n| match n.as_str() {
                "oracle" => Ok(MethodId::Oracle),
                "belief-map" => Ok(MethodId::BeliefMap),
                "last-ack" => Ok(MethodId::LastAck),
                "const-beta" => Ok(MethodId::ConstantBeta(beta)),
                "pomdp" => Ok(MethodId::PomdpChannel),
                "random-const-beta" => Ok(MethodId::RandomChannelConstBeta(beta)),
                "oracle-channel" => Ok(MethodId::OracleChannel),
                other => Err(invalid("run.methods", format!("unknown method {other:?}"))),
            })
            .collect()
    }

    /// Experiment-level sensor operating point: from `zeta` via the ROC
    /// inverse, from `epsilon` via the ROC, or the default epsilon.
    pub fn sensor_design(&self) -> Result<SensorDesign, ConfigError> {
        self.design_from(self.sensor.epsilon, self.sensor.zeta, "sensor")
    }

    /// Operating point of one channel: its overrides when present,
    /// otherwise the experiment-level design.
    pub fn channel_sensor_design(&self, idx: usize) -> Result<SensorDesign, ConfigError> {
        let ch = &self.channels[idx];
        if ch.epsilon.is_none() && ch.zeta.is_none() {
            return self.sensor_design();
        }
        self.design_from(ch.epsilon, ch.zeta, &format!("channels[{idx}]"))
    }

    fn design_from(
        &self,
        epsilon: Option<f64>,
        zeta: Option<f64>,
        key_base: &str,
    ) -> Result<SensorDesign, ConfigError> {
        let roc =
            RocModel::new(self.sensor.kappa).map_err(|e| invalid("sensor.kappa", e.to_string()))?;
        if let Some(z) = zeta {
            return roc
                .operating_point_for_collision(z)
                .map_err(|e| invalid(format!("{key_base}.zeta"), e.to_string()));
        }
        let eps = epsilon.unwrap_or(DEFAULT_EPSILON);
        SensorDesign::new(eps, roc.delta_for_epsilon(eps))
            .map_err(|e| invalid(format!("{key_base}.epsilon"), e.to_string()))
    }

    /// Build the configured channel environments (model + sensor + kernel).
    pub fn envs(&self) -> Result<Vec<ChannelEnv>, ConfigError> {
        self.channels
            .iter()
            .enumerate()
            .map(|(i, ch)| {
                let key = |f: &str| format!("channels[{i}].{f}");
                let n = ch.states - 1;
                let gains = ch
                    .gains
                    .clone()
                    .unwrap_or_else(|| ChannelModel::default_gains(n));
                let loss = ch
                    .loss
                    .clone()
                    .unwrap_or_else(|| ChannelModel::default_loss(n));
                let a = build_transition(ch.states, ch.p_stay, ch.p_to_busy, ch.p_busy_stay)
                    .map_err(|e| invalid(key("p_stay"), e.to_string()))?;
                let model = ChannelModel::new(gains, loss, a, ch.bandwidth_hz, ch.slot_secs)
                    .map_err(|e| invalid(key("gains"), e.to_string()))?;
                let sensor = self.channel_sensor_design(i)?;
                let sigma = ch.sigma.unwrap_or(self.sensor.sigma);
                ChannelEnv::new(model, sensor, sigma)
                    .map_err(|e| invalid(key("sigma"), e.to_string()))
            })
            .collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_paper_defaults() {
        let cfg = parse_config("", "<empty>").unwrap();
        assert_eq!(cfg.channels.len(), 1);
        assert_eq!(cfg.channels[0].states, 5);
        assert_eq!(cfg.sensor.sigma, 0.1);
        assert_eq!(cfg.run.horizon, 200);
        assert_eq!(cfg.run.seeds, 50);
        let sensor = cfg.sensor_design().unwrap();
        assert!((sensor.epsilon - 0.6).abs() < 1e-12);
        assert!((sensor.delta - 0.064).abs() < 1e-12);
        assert_eq!(cfg.effective_methods().unwrap().len(), 4);
        assert_eq!(cfg.effective_resolution(), 10);
    }

    #[test]
    fn negative_sigma_sweep_names_the_key() {
        let text = r#"
[sweep]
param = "sigma"
values = [0.1, -0.2]
"#;
        let err = parse_config(text, "<test>").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("sigma"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config("banana = 1\n", "<test>").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }));
    }

    #[test]
    fn epsilon_and_zeta_conflict() {
        let text = "[sensor]\nepsilon = 0.5\nzeta = 0.1\n";
        assert!(parse_config(text, "<test>").is_err());
    }

    #[test]
    fn zeta_drives_the_operating_point() {
        let text = "[sensor]\nzeta = 0.064\n";
        let cfg = parse_config(text, "<test>").unwrap();
        let s = cfg.sensor_design().unwrap();
        assert!((s.epsilon - 0.6).abs() < 1e-12);
        assert_eq!(s.delta, 0.064);
    }

    #[test]
    fn sweep_round_trips_through_toml() {
        let mut cfg = ExperimentConfig::default();
        cfg.sweep = Some(SweepConfig {
            param: "p_stay".into(),
            values: vec![0.5, 0.9],
        });
        let text = cfg.to_toml();
        let back = parse_config(&text, "<roundtrip>").unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn two_channel_defaults() {
        let text = "[[channels]]\nstates = 3\n[[channels]]\nstates = 3\n";
        let cfg = parse_config(text, "<test>").unwrap();
        assert_eq!(cfg.effective_resolution(), 8);
        let methods = cfg.effective_methods().unwrap();
        assert_eq!(methods.len(), 3);
        assert!(methods.iter().any(|m| matches!(m, MethodId::PomdpChannel)));
    }

    #[test]
    fn three_channels_rejected() {
        let text = "[[channels]]\n[[channels]]\n[[channels]]\n";
        let err = parse_config(text, "<test>").unwrap_err();
        assert!(err.to_string().contains("channels"));
    }

    #[test]
    fn per_channel_sensor_overrides() {
        let text = r#"
[sensor]
epsilon = 0.6
sigma = 0.1

[[channels]]
states = 3

[[channels]]
states = 3
zeta = 0.125
sigma = 0.3
"#;
        let cfg = parse_config(text, "<test>").unwrap();
        let envs = cfg.envs().unwrap();
        assert!((envs[0].sensor.epsilon - 0.6).abs() < 1e-12);
        assert_eq!(envs[0].kernel.sigma(), 0.1);
        // kappa = 3 ROC inverse: epsilon = 1 - 0.125^(1/3) = 0.5
        assert!((envs[1].sensor.epsilon - 0.5).abs() < 1e-12);
        assert_eq!(envs[1].sensor.delta, 0.125);
        assert_eq!(envs[1].kernel.sigma(), 0.3);

        // an epsilon sweep resets the overrides on every channel
        let mut swept = cfg.clone();
        swept.sweep = Some(SweepConfig {
            param: "epsilon".into(),
            values: vec![0.4],
        });
        let point = swept.apply_sweep_value(0.4).unwrap();
        let envs = point.envs().unwrap();
        assert!((envs[1].sensor.epsilon - 0.4).abs() < 1e-12);

        // both per-channel epsilon and zeta is a conflict
        let bad = "[[channels]]\nepsilon = 0.5\nzeta = 0.1\n";
        assert!(parse_config(bad, "<test>").is_err());
    }

    #[test]
    fn sweep_application() {
        let mut cfg = ExperimentConfig::default();
        cfg.channels.push(ChannelConfig::default());
        cfg.sweep = Some(SweepConfig {
            param: "channel2.p_busy_stay".into(),
            values: vec![0.3],
        });
        let point = cfg.apply_sweep_value(0.3).unwrap();
        assert_eq!(point.channels[1].p_busy_stay, 0.3);
        assert_eq!(point.channels[0].p_busy_stay, 0.1);

        cfg.sweep = Some(SweepConfig {
            param: "states".into(),
            values: vec![4.0],
        });
        let point = cfg.apply_sweep_value(4.0).unwrap();
        assert!(point.channels.iter().all(|c| c.states == 4));
    }
}
