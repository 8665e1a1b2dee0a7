//! Command-line front end: configuration loading, flag overrides, and the
//! `train`, `eval`, `circuit` and `compare` commands.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use pathtune::{GainSet, Maneuver};

pub use commands::Status;
pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "pathtune", version, about = "Train, evaluate and compare path-tracking controller gains")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed for training, noise and per-run seeds.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the learning-rate sweep and pick the most frequent terminal gains.
    Train(TrainArgs),
    /// Worst-case MSE of one gain set over repeated runs.
    Eval(EvalArgs),
    /// One scheduled run over the full circuit.
    Circuit(CircuitArgs),
    /// Rank a list of gain sets with and without noise.
    Compare(CompareArgs),
    /// Print the default configuration.
    Defaults,
}

fn parse_maneuver(s: &str) -> Result<Maneuver, String> {
    match s.parse::<Maneuver>() {
        Ok(Maneuver::Default) => Err("choose lane-change or roundabout".into()),
        Ok(m) => Ok(m),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_gains(s: &str) -> Result<GainSet, String> {
    GainSet::parse(s).map_err(|e| e.to_string())
}

fn parse_schedule_entry(s: &str) -> Result<(Maneuver, GainSet), String> {
    let (m, g) = s.split_once('=').ok_or("expected MANEUVER=kv,kl,ks,ki")?;
    Ok((m.trim().parse::<Maneuver>().map_err(|e| e.to_string())?, parse_gains(g)?))
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_parser = parse_maneuver)]
    pub maneuver: Maneuver,
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Comma-separated learning rates.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_parser = parse_maneuver)]
    pub maneuver: Maneuver,
    /// Gains as `kv,kl,ks,ki`.
    #[arg(long, value_parser = parse_gains, conflicts_with = "gains_file", required_unless_present = "gains_file")]
    pub gains: Option<GainSet>,
    /// Chosen-gains JSON from `train`, or a text file with a `kv,kl,ks,ki` line.
    #[arg(long)]
    pub gains_file: Option<PathBuf>,
    #[arg(long)]
    pub noise: bool,
    #[arg(long)]
    pub runs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CircuitArgs {
    #[arg(long)]
    pub noise: bool,
    /// Overrides one schedule entry, e.g. `roundabout=4.6,21,21,0.91`.
    #[arg(long = "schedule", value_parser = parse_schedule_entry)]
    pub schedule: Vec<(Maneuver, GainSet)>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, value_parser = parse_maneuver)]
    pub maneuver: Maneuver,
    /// File with one `kv,kl,ks,ki` line per gain set.
    #[arg(long)]
    pub gains_list: PathBuf,
    #[arg(long)]
    pub runs: Option<usize>,
}

/// Loads the configuration and applies command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.common.seed {
        cfg.sim.seed = seed;
    }
    if let Some(out) = &cli.common.out {
        cfg.output = out.clone();
    }
    match &cli.command {
        Command::Train(a) => {
            if let Some(n) = a.episodes {
                cfg.training.get_mut(a.maneuver)?.episodes = n;
            }
            if let Some(alphas) = &a.alphas {
                cfg.training.alphas = alphas.clone();
            }
        }
        Command::Eval(a) => {
            cfg.noise.enabled |= a.noise;
            if let Some(r) = a.runs {
                cfg.eval.runs = r;
            }
        }
        Command::Circuit(a) => {
            cfg.noise.enabled |= a.noise;
            for (m, g) in &a.schedule {
                cfg.schedule = std::mem::take(&mut cfg.schedule).with(*m, *g);
            }
        }
        Command::Compare(a) => {
            if let Some(r) = a.runs {
                cfg.eval.runs = r;
            }
        }
        Command::Defaults => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<Status> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Train(a) => commands::train(&cfg, a.maneuver),
        Command::Eval(a) => {
            let gains = match (&a.gains, &a.gains_file) {
                (Some(g), _) => *g,
                (None, Some(path)) => commands::read_gains_file(path)?,
                (None, None) => bail!("either --gains or --gains-file is required"),
            };
            commands::eval(&cfg, a.maneuver, gains)
        }
        Command::Circuit(_) => commands::circuit(&cfg),
        Command::Compare(a) => commands::compare(&cfg, a.maneuver, &a.gains_list),
        Command::Defaults => {
            print!("{}", cfg.to_toml_string()?);
            Ok(Status::Success)
        }
    }
}
