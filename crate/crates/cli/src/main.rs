//! Command-line front end for the hybrid entanglement-swapping simulator.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{StateChoice, TomoOptions};
use config::ExperimentConfig;
use error::CliError;
use output::{Emitter, Format};

#[derive(Parser)]
#[command(name = "hybrid-swap", version, about = "Heralded polarization-entanglement distribution by single-click swapping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat JSON experiment config; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_path`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for every sampled quantity (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Report format; `sweep` defaults to csv, everything else to json.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Full swap simulation: heralded state, fidelity, herald probability.
    Swap(Common),
    /// Rate-loss table over the configured loss grid.
    Sweep(Common),
    /// Simulated tomography with MLE and bootstrap errors.
    Tomo {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = StateChoice::Swap)]
        state: StateChoice,
        /// Use the 16-setting minimal set instead of all 36 settings.
        #[arg(long)]
        minimal: bool,
        #[arg(long, default_value_t = hybrid_swap::tomography::BOOTSTRAP_REPLICAS)]
        bootstrap: usize,
    },
    /// CHSH scan over the analyzer angle and its optimum.
    Bell {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = StateChoice::Swap)]
        state: StateChoice,
    },
    /// Interference fringe and mode-overlap estimate for both stations.
    Visibility(Common),
    /// Point rates, scaling exponents and the hybrid/direct crossover.
    Rates(Common),
}

fn prepare(name: &str, common: &Common) -> Result<(ExperimentConfig, Emitter), CliError> {
    let default_format = if name == "sweep" { Format::Csv } else { Format::Json };
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    let dir = common
        .out
        .clone()
        .or_else(|| cfg.output_path.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let emitter = Emitter::new(&dir, name, &cfg, common.format.unwrap_or(default_format))?;
    Ok((cfg, emitter))
}

fn run(cli: Cli) -> Result<Emitter, CliError> {
    match cli.command {
        Command::Swap(c) => {
            let (cfg, mut out) = prepare("swap", &c)?;
            commands::swap(&cfg, &mut out)?;
            Ok(out)
        }
        Command::Sweep(c) => {
            let (cfg, mut out) = prepare("sweep", &c)?;
            commands::sweep(&cfg, &mut out)?;
            Ok(out)
        }
        Command::Tomo { common, state, minimal, bootstrap } => {
            let (cfg, mut out) = prepare("tomo", &common)?;
            let opts = TomoOptions { state, minimal, replicas: bootstrap };
            commands::tomo(&cfg, &opts, &mut out)?;
            Ok(out)
        }
        Command::Bell { common, state } => {
            let (cfg, mut out) = prepare("bell", &common)?;
            commands::bell(&cfg, state, &mut out)?;
            Ok(out)
        }
        Command::Visibility(c) => {
            let (cfg, mut out) = prepare("visibility", &c)?;
            commands::visibility(&cfg, &mut out)?;
            Ok(out)
        }
        Command::Rates(c) => {
            let (cfg, mut out) = prepare("rates", &c)?;
            commands::rates(&cfg, &mut out)?;
            Ok(out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(out) => {
            for p in out.written() {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
