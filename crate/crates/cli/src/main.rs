use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bistable_cli::{parse_config, run, Experiment, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bistable", version, about = "Feedback control of a qubit with a telegraphing frequency")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Syndrome error rate against probe time, both modes pinned.
    SyndromeSweep(Common),
    /// Fixed-frame Ramsey fringe on the configured TLS.
    Ramsey(Common),
    /// Interleaved fringe matrices with and without feedback.
    Mitigate(Common),
    /// Interleaved randomized benchmarking, windowed.
    Rb(Common),
    /// Improvement map over splitting and switching rate.
    Heatmap(Common),
    /// Syndrome error rate against switching rate.
    Perr(Common),
    /// Ensemble coherence under telegraph noise.
    Ak(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; its `experiment` must match the subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    replicas: Option<usize>,
    /// Shots, cycles or trajectories per point, whichever the experiment uses.
    #[arg(long)]
    shots: Option<usize>,
}

fn resolve(experiment: Experiment, args: &Common) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let cfg = parse_config(&text)?;
            if cfg.experiment != experiment {
                bail!("experiment: config says {}, command line says {experiment}", cfg.experiment);
            }
            cfg
        }
        None => RunConfig::defaults(experiment),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.replicas {
        cfg.replicas = n;
    }
    if let Some(n) = args.shots {
        cfg.set_shots(n)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::SyndromeSweep(a) => (Experiment::SyndromeSweep, a),
        Command::Ramsey(a) => (Experiment::Ramsey, a),
        Command::Mitigate(a) => (Experiment::Mitigate, a),
        Command::Rb(a) => (Experiment::Rb, a),
        Command::Heatmap(a) => (Experiment::Heatmap, a),
        Command::Perr(a) => (Experiment::Perr, a),
        Command::Ak(a) => (Experiment::Ak, a),
    };
    let result = resolve(experiment, args).and_then(|cfg| run(&cfg, &args.out));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", args.out.join(f).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
