//! Experiment orchestration: sweep expansion, offline policy solving, and
//! the parallel seeded episode runs with seed aggregation.
//!
//! Episodes run in parallel with independent streams; results are sorted by
//! (sweep index, method index, seed index) before any reduction, so output
//! is independent of the thread schedule. The episode seed mixes the base
//! seed with the sweep and seed indices but *not* the method, so methods
//! are compared on common random numbers.

use rayon::prelude::*;
use thiserror::Error;

use cogvid_core::rd::{BetaGrid, RdParams};
use cogvid_core::rng::derive_seed;
use cogvid_core::sensing::ChannelEnv;
use cogvid_core::sim::{compute_metrics, run_episode, MethodId, Metrics, SimError, SimSetup};
use cogvid_core::solver::{solve_finite_horizon, PolicySolution, SolverError, SolverParams};
use cogvid_core::stats::{aggregate_ci, StatsError};

use crate::artifact::{model_hash, ArtifactEntry, ArtifactError, PolicyArtifact};
use crate::config::{ConfigError, ExperimentConfig};
use crate::csvout::{AggregateRow, ResultRow};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error("method {0} requires a solved policy artifact (run `solve` first and pass --policy)")]
    PolicyRequired(&'static str),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("cannot write output {path}: {source}")]
    Output {
        path: String,
        source: std::io::Error,
    },
}

/// Process exit code for an error, per the documented contract:
/// 1 config, 2 missing/incompatible artifact, 3 numerical failure.
pub fn exit_code(err: &RunnerError) -> i32 {
    match err {
        RunnerError::Config(_) | RunnerError::Output { .. } => 1,
        RunnerError::Artifact(_) | RunnerError::PolicyRequired(_) => 2,
        RunnerError::Sim(SimError::MissingPolicy)
        | RunnerError::Sim(SimError::PolicyMismatch { .. }) => 2,
        RunnerError::Sim(_) | RunnerError::Solver(_) | RunnerError::Stats(_) => 3,
    }
}

/// One sweep point resolved into concrete models.
pub struct PreparedPoint {
    pub sweep_value: Option<f64>,
    pub envs: Vec<ChannelEnv>,
    pub model_hash: [u8; 32],
}

/// The fixed (non-swept) experiment pieces.
pub struct Prepared {
    pub config: ExperimentConfig,
    pub rd: RdParams,
    pub beta_grid: BetaGrid,
    pub methods: Vec<MethodId>,
    pub solver: SolverParams,
    pub points: Vec<PreparedPoint>,
}

pub fn prepare(config: &ExperimentConfig) -> Result<Prepared, RunnerError> {
    config.validate()?;
    let rd = config.rd_params();
    let beta_grid = config.beta_grid();
    let methods = config.effective_methods()?;
    let solver = SolverParams {
        horizon: config.run.horizon,
        resolution: config.effective_resolution(),
        penalty: config.solver.penalty,
        max_joint_points: config.solver.max_joint_points,
    };

    let mut points = Vec::new();
    match &config.sweep {
        None => {
            let envs = config.envs()?;
            let hash = model_hash(
                &envs,
                &rd,
                &beta_grid,
                solver.penalty,
                solver.horizon,
                solver.resolution,
            );
            points.push(PreparedPoint {
                sweep_value: None,
                envs,
                model_hash: hash,
            });
        }
        Some(sweep) => {
            for &value in &sweep.values {
                let point_cfg = config.apply_sweep_value(value)?;
                let envs = point_cfg.envs()?;
                let hash = model_hash(
                    &envs,
                    &rd,
                    &beta_grid,
                    solver.penalty,
                    solver.horizon,
                    solver.resolution,
                );
                points.push(PreparedPoint {
                    sweep_value: Some(value),
                    envs,
                    model_hash: hash,
                });
            }
        }
    }
    Ok(Prepared {
        config: config.clone(),
        rd,
        beta_grid,
        methods,
        solver,
        points,
    })
}

/// Solve the sensing policy for every sweep point (the offline stage).
pub fn solve_config(config: &ExperimentConfig) -> Result<PolicyArtifact, RunnerError> {
    let prep = prepare(config)?;
    let entries: Vec<ArtifactEntry> = prep
        .points
        .par_iter()
        .map(|point| {
            let solution =
                solve_finite_horizon(&point.envs, &prep.rd, &prep.beta_grid, &prep.solver)?;
            Ok(ArtifactEntry {
                sweep_value: point.sweep_value,
                model_hash: point.model_hash,
                solution,
            })
        })
        .collect::<Result<_, RunnerError>>()?;
    Ok(PolicyArtifact {
        horizon: prep.solver.horizon,
        resolution: prep.solver.resolution,
        entries,
    })
}

#[derive(Debug)]
pub struct RunOutput {
    pub raw: Vec<ResultRow>,
    pub aggregates: Vec<AggregateRow>,
}

/// Run every (sweep point, method, seed) episode and aggregate.
pub fn run_config(
    config: &ExperimentConfig,
    artifact: Option<&PolicyArtifact>,
) -> Result<RunOutput, RunnerError> {
    let prep = prepare(config)?;
    let needs_policy = prep.methods.iter().any(|m| m.needs_policy());

    // resolve the policy per point up front so artifact problems surface
    // before any episode runs
    let mut policies: Vec<Option<&PolicySolution>> = Vec::with_capacity(prep.points.len());
    if needs_policy {
        let artifact = artifact.ok_or(RunnerError::PolicyRequired("pomdp"))?;
        if artifact.horizon != prep.solver.horizon {
            return Err(ArtifactError::HorizonMismatch {
                policy: artifact.horizon,
                config: prep.solver.horizon,
            }
            .into());
        }
        for point in &prep.points {
            let entry =
                artifact
                    .entry_for(point.sweep_value)
                    .ok_or(ArtifactError::MissingEntry {
                        value: point.sweep_value,
                    })?;
            if entry.model_hash != point.model_hash {
                return Err(ArtifactError::HashMismatch {
                    sweep_value: point.sweep_value,
                }
                .into());
            }
            policies.push(Some(&entry.solution));
        }
    } else {
        policies.resize(prep.points.len(), None);
    }

    let seeds = prep.config.run.seeds;
    let base_seed = prep.config.run.base_seed;
    let horizon = prep.config.run.horizon;
    let penalty = prep.solver.penalty;

    // flat task list over (point, method, seed)
    let tasks: Vec<(usize, usize, usize)> = (0..prep.points.len())
        .flat_map(|p| (0..prep.methods.len()).flat_map(move |m| (0..seeds).map(move |s| (p, m, s))))
        .collect();

    let mut results: Vec<((usize, usize, usize), Metrics)> = tasks
        .par_iter()
        .map(|&(p, m, s)| {
            let setup = SimSetup {
                envs: &prep.points[p].envs,
                rd: &prep.rd,
                beta_grid: &prep.beta_grid,
                horizon,
                penalty,
                policy: policies[p],
            };
            let seed = derive_seed(base_seed, &[p as u64, s as u64]);
            let records = run_episode(&setup, &prep.methods[m], seed)?;
            Ok(((p, m, s), compute_metrics(&records)))
        })
        .collect::<Result<_, RunnerError>>()?;
    results.sort_by_key(|&(key, _)| key);

    let sweep_param = prep
        .config
        .sweep
        .as_ref()
        .map(|s| s.param.clone())
        .unwrap_or_else(|| "none".into());
    let experiment = prep.config.experiment.clone();

    let mut raw = Vec::with_capacity(results.len());
    for &((p, m, s), metrics) in &results {
        raw.push(ResultRow {
            experiment: experiment.clone(),
            sweep_param: sweep_param.clone(),
            sweep_value: prep.points[p].sweep_value.unwrap_or(0.0),
            method: prep.methods[m].label(),
            seed: s as u64,
            avg_distortion: metrics.avg_distortion,
            spectrum_utilization: metrics.spectrum_utilization,
            collision_rate: metrics.collision_rate,
            accessed_slots: (metrics.accessed_available + metrics.accessed_busy) as u64,
            available_slots: metrics.available_sensed as u64,
        });
    }

    let mut aggregates = Vec::new();
    for p in 0..prep.points.len() {
        for m in 0..prep.methods.len() {
            let per_seed: Vec<&Metrics> = results
                .iter()
                .filter(|((rp, rm, _), _)| *rp == p && *rm == m)
                .map(|(_, metrics)| metrics)
                .collect();
            let dist: Vec<f64> = per_seed
                .iter()
                .map(|x| x.avg_distortion)
                .filter(|v| v.is_finite())
                .collect();
            let su: Vec<f64> = per_seed.iter().map(|x| x.spectrum_utilization).collect();
            let coll: Vec<f64> = per_seed.iter().map(|x| x.collision_rate).collect();
            aggregates.push(AggregateRow {
                experiment: experiment.clone(),
                sweep_param: sweep_param.clone(),
                sweep_value: prep.points[p].sweep_value.unwrap_or(0.0),
                method: prep.methods[m].label(),
                seeds,
                avg_distortion: ci_or_nan(&dist)?,
                spectrum_utilization: ci_or_nan(&su)?,
                collision_rate: ci_or_nan(&coll)?,
            });
        }
    }

    Ok(RunOutput { raw, aggregates })
}

/// Mean and half-width; seeds whose metric is undefined (NaN sentinel) are
/// excluded, and fewer than two usable samples yield NaN.
fn ci_or_nan(samples: &[f64]) -> Result<(f64, f64), RunnerError> {
    if samples.len() < 2 {
        return Ok((f64::NAN, f64::NAN));
    }
    let ci = aggregate_ci(samples)?;
    Ok((ci.mean, ci.half_width))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, SweepConfig};

    fn tiny_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment = "tiny".into();
        cfg.channels[0].states = 3;
        cfg.run.horizon = 40;
        cfg.run.seeds = 4;
        cfg.sweep = Some(SweepConfig {
            param: "p_stay".into(),
            values: vec![0.6, 0.8],
        });
        cfg
    }

    #[test]
    fn raw_row_count_is_sweep_times_methods_times_seeds() {
        let cfg = tiny_config();
        let out = run_config(&cfg, None).unwrap();
        assert_eq!(out.raw.len(), 2 * 4 * 4);
        assert_eq!(out.aggregates.len(), 2 * 4);
    }

    #[test]
    fn aggregate_means_match_raw_rows() {
        let cfg = tiny_config();
        let out = run_config(&cfg, None).unwrap();
        for agg in &out.aggregates {
            let values: Vec<f64> = out
                .raw
                .iter()
                .filter(|r| {
                    r.method == agg.method && r.sweep_value.to_bits() == agg.sweep_value.to_bits()
                })
                .map(|r| r.avg_distortion)
                .filter(|v| v.is_finite())
                .collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            assert!((mean - agg.avg_distortion.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_config_and_seed_identical_output() {
        let cfg = tiny_config();
        let a = run_config(&cfg, None).unwrap();
        let b = run_config(&cfg, None).unwrap();
        assert_eq!(a.raw, b.raw);
        assert_eq!(a.aggregates, b.aggregates);
    }

    #[test]
    fn output_is_independent_of_thread_count() {
        let cfg = tiny_config();
        let parallel = run_config(&cfg, None).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_config(&cfg, None))
            .unwrap();
        assert_eq!(parallel.raw, single.raw);
        assert_eq!(parallel.aggregates, single.aggregates);
    }

    #[test]
    fn pomdp_without_artifact_is_a_policy_error() {
        let cfg = parse_config(
            "[[channels]]\nstates = 3\n[[channels]]\nstates = 3\n[run]\nseeds = 2\nhorizon = 20\n",
            "<t>",
        )
        .unwrap();
        let err = run_config(&cfg, None).unwrap_err();
        assert_eq!(exit_code(&err), 2);
    }

    #[test]
    fn solve_then_run_two_channels() {
        let mut cfg = parse_config(
            "[[channels]]\nstates = 3\np_to_busy = 0.2\np_stay = 0.7\n[[channels]]\nstates = 3\np_to_busy = 0.6\np_stay = 0.3\np_busy_stay = 0.8\n",
            "<t>",
        )
        .unwrap();
        cfg.run.seeds = 3;
        cfg.run.horizon = 30;
        let artifact = solve_config(&cfg).unwrap();
        let out = run_config(&cfg, Some(&artifact)).unwrap();
        assert_eq!(out.raw.len(), 3 * 3);

        // horizon mismatch is rejected
        cfg.run.horizon = 31;
        let err = run_config(&cfg, Some(&artifact)).unwrap_err();
        assert_eq!(exit_code(&err), 2);
    }

    #[test]
    fn model_change_invalidates_the_policy() {
        let mut cfg = parse_config(
            "[[channels]]\nstates = 3\n[[channels]]\nstates = 3\n",
            "<t>",
        )
        .unwrap();
        cfg.run.seeds = 2;
        cfg.run.horizon = 20;
        let artifact = solve_config(&cfg).unwrap();
        cfg.sensor.sigma = 0.4;
        let err = run_config(&cfg, Some(&artifact)).unwrap_err();
        assert!(matches!(
            err,
            RunnerError::Artifact(ArtifactError::HashMismatch { .. })
        ));
        assert_eq!(exit_code(&err), 2);
    }
}
