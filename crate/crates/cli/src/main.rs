mod commands;
mod config;
mod emit;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::emit::Emitter;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Core {
        context: &'static str,
        #[source]
        source: acmob::Error,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<acmob::Error> for CliError {
    fn from(source: acmob::Error) -> Self {
        CliError::Core {
            context: "output",
            source,
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core { source, .. } if source.is_numerical() => 3,
            CliError::Core { .. } => 2,
            CliError::Io(_) => 1,
        }
    }
}

/// Tag core errors with the module that raised them.
pub trait Context<T> {
    fn ctx(self, context: &'static str) -> Result<T, CliError>;
}

impl<T> Context<T> for acmob::Result<T> {
    fn ctx(self, context: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core { context, source })
    }
}

#[derive(Parser)]
#[command(
    name = "acmob",
    version,
    about = "Allen-Cahn homogenization laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment configuration; defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Standing wave profile.
    Wave,
    /// Effective mobility per direction, optionally tabulated on angles.
    Mobility,
    /// Layer averages of the mobility in lattice directions.
    Layers,
    /// One-dimensional corrector per direction.
    Corrector,
    /// Penalized corrector sweep over delta.
    DeltaSweep,
    /// Averaging modulus over time for each direction.
    Averaging,
    /// Phase-field simulation.
    Simulate,
    /// Effective level-set flow.
    Levelset,
    /// Hausdorff distance between two recorded runs.
    Compare,
    /// Initialization forcing and its ODE flow.
    Initdyn,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Wave => "wave",
            Command::Mobility => "mobility",
            Command::Layers => "layers",
            Command::Corrector => "corrector",
            Command::DeltaSweep => "delta-sweep",
            Command::Averaging => "averaging",
            Command::Simulate => "simulate",
            Command::Levelset => "levelset",
            Command::Compare => "compare",
            Command::Initdyn => "initdyn",
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.validate()?;
    let start = Instant::now();
    let mut out = Emitter::new(&cli.out)?;
    let summary = match cli.command {
        Command::Wave => commands::wave(&cfg, &mut out),
        Command::Mobility => commands::mobility(&cfg, &mut out),
        Command::Layers => commands::layers(&cfg, &mut out),
        Command::Corrector => commands::corrector(&cfg, &mut out),
        Command::DeltaSweep => commands::delta_sweep(&cfg, &mut out),
        Command::Averaging => commands::averaging(&cfg, &mut out),
        Command::Simulate => commands::simulate(&cfg, &mut out),
        Command::Levelset => commands::levelset(&cfg, &mut out),
        Command::Compare => commands::compare(&cfg, &mut out),
        Command::Initdyn => commands::initdyn(&cfg, &mut out),
    }?;
    let manifest = out.finish(
        cli.command.name(),
        &cfg,
        start.elapsed().as_secs_f64(),
        summary,
    )?;
    println!(
        "{} ({} outputs)",
        cli.out.join(emit::MANIFEST).display(),
        manifest.outputs.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("acmob: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
