use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use ngtorus_cli::{preset, replay, run_experiment, ExperimentConfig, Kind, Outcome};

#[derive(Parser)]
#[command(name = "ngtorus", version, about = "Naming Game on random geometric graphs over the unit torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build random geometric graphs and write them as text.
    GenerateGraph(RunArgs),
    /// Agent-based runs with observables and spin snapshots.
    RunMicro(RunArgs),
    /// Mean-field runs with PGM snapshots and field dumps.
    RunMeanfield(RunArgs),
    /// Pair correlation curves and scaling collapse.
    Correlation(RunArgs),
    /// Boundary curvature and normal speed of a mean-field domain.
    Boundary(RunArgs),
    /// Shrinking disk: mean-field and agent-based domain size.
    Shrink(RunArgs),
    /// Consensus time against committed fraction.
    CommittedSweep(RunArgs),
    /// Terminal-state statistics from random initial conditions.
    TerminalCensus(RunArgs),
    /// Run whatever kind a config file names.
    Run {
        config: PathBuf,
        #[command(flatten)]
        args: Overrides,
    },
    /// Rerun a manifest and check every output against its checksum.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a preset as a config file.
    Preset { name: String },
}

#[derive(Args)]
struct RunArgs {
    /// Start from this config file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Start from a named preset.
    #[arg(long)]
    preset: Option<String>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any config key, as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        macro_rules! put {
            ($($f:ident),*) => {$(
                if let Some(v) = self.$f.clone() {
                    cfg.$f = v;
                }
            )*};
        }
        put!(n, radius, grid, q, alpha, t_max, dt, seed, replicas, out);
        cfg.apply_overrides(self.set.iter().map(String::as_str))?;
        Ok(())
    }
}

fn load(path: &PathBuf) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(ExperimentConfig::parse(&text)?)
}

fn configure(kind: Kind, args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => load(path)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => ExperimentConfig { out: PathBuf::from(kind.name()), ..ExperimentConfig::default() },
    };
    cfg.kind = kind;
    args.overrides.apply(&mut cfg)?;
    Ok(cfg)
}

fn report(outcome: &Outcome) {
    println!("wrote {} files to {}", outcome.artifacts.len() + 1, outcome.dir.display());
}

fn run(cli: Cli) -> Result<()> {
    let (kind, args) = match cli.command {
        Command::GenerateGraph(a) => (Kind::GenerateGraph, a),
        Command::RunMicro(a) => (Kind::RunMicro, a),
        Command::RunMeanfield(a) => (Kind::RunMeanfield, a),
        Command::Correlation(a) => (Kind::Correlation, a),
        Command::Boundary(a) => (Kind::Boundary, a),
        Command::Shrink(a) => (Kind::Shrink, a),
        Command::CommittedSweep(a) => (Kind::CommittedSweep, a),
        Command::TerminalCensus(a) => (Kind::TerminalCensus, a),
        Command::Run { config, args } => {
            let mut cfg = load(&config)?;
            args.apply(&mut cfg)?;
            report(&run_experiment(&cfg)?);
            return Ok(());
        }
        Command::Replay { manifest, out } => {
            let outcome = replay(&manifest, out)?;
            report(&outcome);
            println!("all {} artifacts match the manifest", outcome.artifacts.len());
            return Ok(());
        }
        Command::Preset { name } => {
            print!("{}", preset(&name)?.to_text());
            return Ok(());
        }
    };
    let cfg = configure(kind, &args)?;
    report(&run_experiment(&cfg)?);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
