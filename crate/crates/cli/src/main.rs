use std::path::PathBuf;
use std::process::ExitCode;

use cespdc::config::RunConfig;
use cespdc::correlation::CorrelationError;
use cespdc::dispersion::DispersionError;
use cespdc::filter::FilterError;
use cespdc::plan::PlanError;
use cespdc::rb::RbError;
use cespdc::run::{run, Command};
use cespdc::Error;
use clap::{Parser, Subcommand};

/// Exit statuses. 2 is reserved for usage errors reported by the argument parser.
mod exit {
    pub const CONFIG: u8 = 3;
    pub const INFEASIBLE: u8 = 4;
    pub const NUMERICAL: u8 = 5;
    pub const IO: u8 = 6;
    pub const DOMAIN: u8 = 7;
}

#[derive(Parser)]
#[command(name = "cespdc", version, about = "Cavity-enhanced SPDC source simulator")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration; used when --config is absent.
    #[arg(long, global = true, default_value = "paper-2020")]
    preset: String,
    /// Output directory; defaults to out/<command>.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Input file for commands that read one (fit: histogram CSV).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// JSI along the energy-conservation line, raw and filtered.
    Jsi,
    /// Mode pairs and cluster report.
    Clusters,
    /// Difference-frequency scan of the cluster structure.
    DfgScan,
    /// Search spacer length and reflectivity for the filter.
    FilterDesign,
    /// Signal singles versus filter detuning through the vapour cell.
    FilterScan,
    /// Simulate, histogram and fit the signal-idler correlation.
    G2,
    /// Simulated detection time tags.
    Events,
    /// Fit the correlation envelope of a histogram CSV (--input).
    Fit,
    /// Laser, AOM and pump frequency plan.
    Plan,
    /// Vapour-cell transmission of signal and idler photons.
    Spectroscopy,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Jsi => Command::Jsi,
            Cmd::Clusters => Command::Clusters,
            Cmd::DfgScan => Command::DfgScan,
            Cmd::FilterDesign => Command::FilterDesign,
            Cmd::FilterScan => Command::FilterScan,
            Cmd::G2 => Command::G2,
            Cmd::Events => Command::Events,
            Cmd::Fit => Command::Fit,
            Cmd::Plan => Command::Plan,
            Cmd::Spectroscopy => Command::Spectroscopy,
        }
    }
}

fn plan_code(e: &PlanError) -> u8 {
    match e {
        PlanError::NoFeatures | PlanError::Infeasible { .. } | PlanError::TuningOutOfRange { .. } => exit::INFEASIBLE,
        PlanError::Dispersion(DispersionError::Parse(_)) => exit::CONFIG,
        PlanError::Cavity(_) | PlanError::Dispersion(_) => exit::DOMAIN,
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => exit::CONFIG,
        Error::Io(_) | Error::Csv(_) => exit::IO,
        Error::Plan(p) | Error::Rb(RbError::Plan(p)) => plan_code(p),
        Error::Filter(FilterError::Infeasible { .. }) | Error::Rb(RbError::Filter(FilterError::Infeasible { .. })) => {
            exit::INFEASIBLE
        }
        Error::Correlation(CorrelationError::NotConverged { .. } | CorrelationError::InsufficientData(_)) => {
            exit::NUMERICAL
        }
        Error::Dispersion(DispersionError::Parse(_)) | Error::Rb(RbError::Parse(_) | RbError::UnknownIsotope(_)) => {
            exit::CONFIG
        }
        _ => exit::DOMAIN,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = Command::from(cli.command);
    let loaded = match &cli.config {
        Some(path) => RunConfig::load(path),
        None => RunConfig::preset(&cli.preset),
    };
    let mut config = match loaded {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit::CONFIG);
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = cli.out.unwrap_or_else(|| PathBuf::from("out").join(command.name()));
    match run(command, &config, &out, cli.input.as_deref()) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            println!("wrote {} file(s) and manifest.toml to {}", outcome.outputs.len(), out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
