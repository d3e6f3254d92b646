use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use commands::{CliError, Context, Overrides};
use config::ExperimentConfig;

/// Approximate ST-MRAM weight storage experiments.
#[derive(Debug, Parser)]
#[command(name = "stmram", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration file (`key = value` under `[sections]`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// First run seed; seeds are seed, seed+1, ...
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    /// Ignore device-to-device variability.
    #[arg(long, global = true)]
    no_variability: bool,
    /// Keep finished rows of an existing output file and compute the rest.
    #[arg(long, global = true)]
    resume: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the switching, energy and variability models.
    Calibrate,
    /// Pulse duration and energy per target BER.
    EnergyCurve,
    /// Train with uniform programming over a grid of BERs.
    SweepBer,
    /// Train with two-tier programming over (n_lsb, LSB BER).
    SweepTier,
    /// Train one configuration.
    Train,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let ctx = Context::new(
        cfg,
        &Overrides {
            out: cli.out,
            seed: cli.seed,
            jobs: cli.jobs,
            epochs: cli.epochs,
            no_variability: cli.no_variability,
            resume: cli.resume,
        },
    )?;
    match cli.command {
        Command::Calibrate => commands::calibrate(&ctx),
        Command::EnergyCurve => commands::energy_curve(&ctx),
        Command::SweepBer => commands::sweep_ber(&ctx),
        Command::SweepTier => commands::sweep_tier(&ctx),
        Command::Train => commands::train(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
