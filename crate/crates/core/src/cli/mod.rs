//! Batch entry point: `stochint <experiment> [--config file.toml] ...`.
//!
//! Exit status: 0 all checks passed, 1 a check failed, 2 invalid
//! configuration, 3 numeric failure, 4 I/O failure.

mod config;
mod experiments;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use config::{
    CoefficientConfig, CoefficientKind, ConvergeConfig, ConvergeTarget, DriverConfig,
    DriverKindName, ExperimentConfig, GridConfig, Integrand, JumpLawName, SpdeConfig, Tolerances,
};
pub use experiments::{run_experiment, Check, Outcome, Table};
pub use report::{config_hash, emit_report, Emitted};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Simulate,
    Dump,
    Integrate,
    Isometry,
    PoissonIdentity,
    Converge,
    Spde,
    Diagnostics,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::Simulate,
        Kind::Dump,
        Kind::Integrate,
        Kind::Isometry,
        Kind::PoissonIdentity,
        Kind::Converge,
        Kind::Spde,
        Kind::Diagnostics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::Dump => "dump",
            Kind::Integrate => "integrate",
            Kind::Isometry => "isometry",
            Kind::PoissonIdentity => "poisson-identity",
            Kind::Converge => "converge",
            Kind::Spde => "spde",
            Kind::Diagnostics => "diagnostics",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "stochint",
    version,
    about = "Stochastic integration experiments against Lévy drivers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate drivers and check their first two moments.
    Simulate(RunArgs),
    /// Write full driver paths as a columnar table.
    Dump(RunArgs),
    /// Lévy integrals of the configured integrands.
    Integrate(RunArgs),
    /// Itô isometry matrix over integrands × drivers.
    Isometry(RunArgs),
    /// Pathwise Poisson identities on jump-augmented grids.
    PoissonIdentity(RunArgs),
    /// Mesh refinement study of left Riemann sums.
    Converge(RunArgs),
    /// Picard iteration for a spectral SPDE.
    Spde(RunArgs),
    /// Embedding, projection and continuity diagnostics.
    Diagnostics(RunArgs),
}

impl Command {
    pub fn split(self) -> (Kind, RunArgs) {
        match self {
            Command::Simulate(a) => (Kind::Simulate, a),
            Command::Dump(a) => (Kind::Dump, a),
            Command::Integrate(a) => (Kind::Integrate, a),
            Command::Isometry(a) => (Kind::Isometry, a),
            Command::PoissonIdentity(a) => (Kind::PoissonIdentity, a),
            Command::Converge(a) => (Kind::Converge, a),
            Command::Spde(a) => (Kind::Spde, a),
            Command::Diagnostics(a) => (Kind::Diagnostics, a),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML experiment file; built-in defaults when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub paths: Option<usize>,
    /// Output directory (default: `out` in the config, else `results`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, env = "STOCHINT_THREADS")]
    pub threads: Option<usize>,
}

/// Process exit status for an error.
pub fn exit_status(err: &Error) -> u8 {
    match err {
        Error::Numeric(_) => 3,
        Error::Io(_) => 4,
        _ => 2,
    }
}

fn load_config(kind: Kind, args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::defaults(kind),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(paths) = args.paths {
        cfg.paths = paths;
    }
    Ok(cfg)
}

/// Runs one experiment and returns the exit status.
pub fn run(kind: Kind, args: RunArgs) -> ExitCode {
    if let Some(threads) = args.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        // Fails only if a pool already exists, which is harmless here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let result = load_config(kind, &args).and_then(|cfg| {
        let out_dir = args
            .out
            .clone()
            .or_else(|| cfg.out.clone())
            .unwrap_or_else(|| PathBuf::from("results"));
        let prepared = cfg.prepare(kind)?;
        let outcome = run_experiment(&prepared)?;
        let emitted = emit_report(&prepared, &outcome, &out_dir)?;
        Ok((outcome, emitted))
    });
    match result {
        Ok((outcome, emitted)) => {
            print!("{}", emitted.summary);
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_status(&e))
        }
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();
    run(kind, args)
}
