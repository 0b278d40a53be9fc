//! `cogvid` command-line front end.
//!
//! Verbs: `solve` (compute and store the sensing policy), `run` (execute an
//! experiment and emit CSV + charts), `sweep` (run with a sweep given on
//! the command line), `preset-list`. Exit codes: 0 success, 1 config error,
//! 2 missing/incompatible policy artifact, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cogvid_cli::artifact::{load_policy, save_policy};
use cogvid_cli::chart::emit_charts;
use cogvid_cli::config::{load_config, ConfigError, ExperimentConfig, SweepConfig};
use cogvid_cli::csvout::{write_aggregates, write_raw};
use cogvid_cli::presets::{preset, preset_names};
use cogvid_cli::runner::{exit_code, run_config, solve_config, RunnerError};

#[derive(Parser)]
#[command(
    name = "cogvid",
    version,
    about = "Opportunistic-spectrum video transmission experiments: POMDP sensing policies, rate adaptation, Monte-Carlo sweeps"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Source {
    /// Experiment configuration file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset (see `preset-list`).
    #[arg(long)]
    preset: Option<String>,
    /// Override the number of seeds.
    #[arg(long)]
    seeds: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the sensing policy offline and store the artifact.
    Solve {
        #[command(flatten)]
        source: Source,
        /// Artifact path (default `<output.dir>/<experiment>_policy.bin`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the experiment: episodes, metrics, CSV, and charts.
    Run {
        #[command(flatten)]
        source: Source,
        /// Policy artifact produced by `solve` (required for the pomdp method).
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Output directory (default from the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run with a sweep specified on the command line.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Parameter to sweep (e.g. sigma, epsilon, channel1.p_stay).
        #[arg(long)]
        param: String,
        /// Comma-separated sweep values.
        #[arg(long)]
        values: String,
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in experiment presets.
    PresetList,
}

fn resolve_config(source: &Source) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match (&source.config, &source.preset) {
        (Some(path), None) => load_config(path)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => {
            return Err(ConfigError::Invalid {
                key: "cli".into(),
                reason: "give --config FILE or --preset NAME".into(),
            })
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    if let Some(seeds) = source.seeds {
        cfg.run.seeds = seeds;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn write_outputs(
    cfg: &ExperimentConfig,
    out_dir: Option<&Path>,
    output: &cogvid_cli::runner::RunOutput,
) -> Result<(), RunnerError> {
    let dir = out_dir
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let as_output_err = |path: &Path| {
        let path = path.display().to_string();
        move |source: std::io::Error| RunnerError::Output {
            path: path.clone(),
            source,
        }
    };
    std::fs::create_dir_all(&dir).map_err(as_output_err(&dir))?;

    let raw_path = dir.join(format!("{}_raw.csv", cfg.experiment));
    write_raw(&raw_path, &output.raw).map_err(as_output_err(&raw_path))?;
    let agg_path = dir.join(format!("{}_agg.csv", cfg.experiment));
    write_aggregates(&agg_path, &output.aggregates).map_err(as_output_err(&agg_path))?;
    let charts =
        emit_charts(&output.aggregates, &dir, &cfg.experiment).map_err(as_output_err(&dir))?;

    println!("wrote {}", raw_path.display());
    println!("wrote {}", agg_path.display());
    for c in charts {
        println!("wrote {}", c.display());
    }
    Ok(())
}

fn run(cmd: Cmd) -> Result<(), RunnerError> {
    match cmd {
        Cmd::Solve { source, out } => {
            let cfg = resolve_config(&source)?;
            let artifact = solve_config(&cfg)?;
            let path = out.unwrap_or_else(|| {
                PathBuf::from(&cfg.output.dir).join(format!("{}_policy.bin", cfg.experiment))
            });
            save_policy(&path, &artifact)?;
            println!(
                "solved {} sweep point(s) at horizon {}; wrote {}",
                artifact.entries.len(),
                artifact.horizon,
                path.display()
            );
            Ok(())
        }
        Cmd::Run {
            source,
            policy,
            out,
        } => {
            let cfg = resolve_config(&source)?;
            let artifact = policy.map(load_policy).transpose()?;
            let output = run_config(&cfg, artifact.as_ref())?;
            write_outputs(&cfg, out.as_deref(), &output)?;
            Ok(())
        }
        Cmd::Sweep {
            source,
            param,
            values,
            policy,
            out,
        } => {
            let mut cfg = resolve_config(&source)?;
            let parsed: Result<Vec<f64>, _> =
                values.split(',').map(|v| v.trim().parse::<f64>()).collect();
            let values = parsed.map_err(|e| ConfigError::Invalid {
                key: "sweep.values".into(),
                reason: e.to_string(),
            })?;
            cfg.sweep = Some(SweepConfig { param, values });
            cfg.validate()?;
            let artifact = policy.map(load_policy).transpose()?;
            let output = run_config(&cfg, artifact.as_ref())?;
            write_outputs(&cfg, out.as_deref(), &output)?;
            Ok(())
        }
        Cmd::PresetList => {
            for (name, description) in preset_names() {
                println!("{name:<8} {description}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
