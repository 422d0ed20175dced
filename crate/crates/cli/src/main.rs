use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lmgp_cli::config::{ExperimentConfig, ExperimentKind};
use lmgp_cli::CliError;

/// Latent-map Gaussian process experiments driven by TOML config files.
#[derive(Debug, Parser)]
#[command(name = "lmgp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `[experiment] seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `[output] dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for independent jobs (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Fit models and write JSON artifacts plus `fit.csv`.
    Fit,
    /// Predict at `[data] inputs` with `[data] artifact`.
    Predict,
    /// Export canonicalized 2D latent positions.
    Latent,
    /// Benchmark sweep over models, sizes, noise levels and replicates.
    Sweep,
    /// Variable-length inputs under both NaN strategies.
    Varlen,
    /// Total-effect sensitivity indices of a benchmark function.
    Sensitivity,
    /// Pool-based Bayesian optimization race.
    Bo,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Self::Fit => ExperimentKind::Fit,
            Self::Predict => ExperimentKind::Predict,
            Self::Latent => ExperimentKind::Latent,
            Self::Sweep => ExperimentKind::Sweep,
            Self::Varlen => ExperimentKind::Varlen,
            Self::Sensitivity => ExperimentKind::Sensitivity,
            Self::Bo => ExperimentKind::Bo,
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let Some(path) = &cli.config else {
        return Err(CliError::Config("--config <path> is required".into()));
    };
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        let text = std::fs::read_to_string(path)?;
        cfg.set_seed(seed, &text);
    }
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = load(&cli).and_then(|cfg| lmgp_cli::run(cli.command.kind(), &cfg));
    match result {
        Ok(outcome) => {
            if outcome == lmgp_cli::Outcome::PartialFailure {
                eprintln!("warning: some jobs failed; see the status column");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
