//! `fairtrans`: train, apply and evaluate fairness pre-processors from a
//! JSON experiment config.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "fairtrans", version, about = "Fairness pre-processing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Number of independent runs (overrides `runs`).
    #[arg(long)]
    runs: Option<usize>,
    /// Set a config field by dotted path, e.g. `preprocessor.epochs=5`.
    /// Values are parsed as JSON, falling back to a string.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let o = Overrides {
            pairs: self.overrides.clone(),
            seed: self.seed,
            runs: self.runs,
            out: self.out.clone(),
        };
        ExperimentConfig::load(self.config.as_deref(), &o)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a preprocessor on run 0 and write `<out>/bundle`.
    Train(Common),
    /// Transform the run-0 splits with a bundle into `<out>/transformed`.
    Transform {
        #[command(flatten)]
        common: Common,
        /// Bundle directory; defaults to `<out>/bundle`.
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Evaluate the zoo per run; without `--bundle` the data is left untransformed.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Train and evaluate every budget point for every run.
    Sweep(Common),
    /// Recompute `hv.csv` and `consistency.csv` from `<out>/sweep.csv`.
    Report(Common),
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(c) => commands::train(&c.load()?),
        Command::Transform { common, bundle } => {
            let cfg = common.load()?;
            let bundle = bundle.unwrap_or_else(|| cfg.out.join(commands::BUNDLE_DIR));
            commands::transform(&cfg, &bundle)
        }
        Command::Evaluate { common, bundle } => commands::evaluate(&common.load()?, bundle.as_deref()),
        Command::Sweep(c) => commands::sweep(&c.load()?),
        Command::Report(c) => commands::report(&c.load()?.out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn,fairtrans=info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
