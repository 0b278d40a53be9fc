//! Named experiment presets (fig3..fig12).
//!
//! fig3-fig7 are single-channel comparisons of the four rate-selection
//! methods; fig8-fig12 are two-channel comparisons of the channel-selection
//! methods. Sweep ladders span the regimes each experiment discusses.

use crate::config::{ChannelConfig, ConfigError, ExperimentConfig, SweepConfig};

fn step_range(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start + step * i as f64).collect()
}

fn single_channel_base(name: &str) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.experiment = name.into();
    cfg
}

/// Two-channel base: 3 states per channel, epsilon 0.62, sigma 0.1.
/// Within-available self-probability follows p_stay = 1 - p_to_busy - 0.1
/// (0.1 of mass mixes to the other gain state) unless stated otherwise.
fn two_channel_base(name: &str) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.experiment = name.into();
    cfg.sensor.epsilon = Some(0.62);
    cfg.channels = vec![ChannelConfig::default(), ChannelConfig::default()];
    for ch in &mut cfg.channels {
        ch.states = 3;
    }
    cfg
}

fn set_channel(cfg: &mut ExperimentConfig, idx: usize, p_to_busy: f64, p_busy_stay: f64) {
    let ch = &mut cfg.channels[idx];
    ch.p_to_busy = p_to_busy;
    ch.p_busy_stay = p_busy_stay;
    ch.p_stay = 1.0 - p_to_busy - 0.1;
}

fn sweep(param: &str, values: Vec<f64>) -> Option<SweepConfig> {
    Some(SweepConfig {
        param: param.into(),
        values,
    })
}

/// The preset catalog: (name, one-line description).
pub fn preset_names() -> &'static [(&'static str, &'static str)] {
    &[
        (
            "fig3",
            "single channel: average distortion vs state count (4 methods)",
        ),
        (
            "fig4",
            "single channel: distortion vs probability of staying in the same state",
        ),
        (
            "fig5",
            "single channel: distortion vs probability of transitioning to busy",
        ),
        (
            "fig6",
            "single channel: distortion vs receiver estimation noise sigma",
        ),
        (
            "fig7",
            "single channel: distortion vs sensor operating point epsilon",
        ),
        (
            "fig8",
            "two channels: spectrum utilization vs channel-1 busy-stay probability",
        ),
        (
            "fig9",
            "two channels: spectrum utilization vs channel-1 to-busy probability",
        ),
        (
            "fig10",
            "two channels: average distortion vs channel-1 busy-stay probability",
        ),
        (
            "fig11",
            "two channels: spectrum utilization vs sensor operating point epsilon",
        ),
        (
            "fig12",
            "two channels: average distortion vs sensor operating point epsilon",
        ),
    ]
}

/// Build the named preset.
pub fn preset(name: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg = match name {
        "fig3" => {
            let mut cfg = single_channel_base("fig3");
            cfg.sweep = sweep("states", vec![3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
            cfg
        }
        "fig4" => {
            let mut cfg = single_channel_base("fig4");
            cfg.sweep = sweep("p_stay", step_range(0.50, 0.05, 10));
            cfg
        }
        "fig5" => {
            let mut cfg = single_channel_base("fig5");
            cfg.channels[0].p_stay = 0.50;
            cfg.sweep = sweep("p_to_busy", step_range(0.01, 0.02, 8));
            cfg
        }
        "fig6" => {
            let mut cfg = single_channel_base("fig6");
            cfg.sweep = sweep("sigma", vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.35, 0.5]);
            cfg
        }
        "fig7" => {
            let mut cfg = single_channel_base("fig7");
            cfg.sweep = sweep("epsilon", step_range(0.1, 0.1, 9));
            cfg
        }
        "fig8" | "fig10" => {
            let mut cfg = two_channel_base(name);
            set_channel(&mut cfg, 0, 0.2, 0.1);
            set_channel(&mut cfg, 1, 0.6, 0.8);
            cfg.sweep = sweep("channel1.p_busy_stay", step_range(0.1, 0.1, 8));
            cfg
        }
        "fig9" => {
            let mut cfg = two_channel_base("fig9");
            set_channel(&mut cfg, 0, 0.2, 0.4);
            // the sweep replaces p_to_busy, so keep a self-probability that
            // stays valid across the whole ladder
            cfg.channels[0].p_stay = 0.5;
            set_channel(&mut cfg, 1, 0.6, 0.8);
            cfg.sweep = sweep(
                "channel1.p_to_busy",
                vec![0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4],
            );
            cfg
        }
        "fig11" | "fig12" => {
            let mut cfg = two_channel_base(name);
            set_channel(&mut cfg, 0, 0.15, 0.4);
            set_channel(&mut cfg, 1, 0.2, 0.6);
            cfg.sweep = sweep("epsilon", step_range(0.1, 0.1, 9));
            cfg
        }
        other => {
            return Err(ConfigError::Invalid {
                key: "preset".into(),
                reason: format!("unknown preset {other:?}; see preset-list"),
            })
        }
    };
    cfg.validate()?;
    Ok(cfg)
}
