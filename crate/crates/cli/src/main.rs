use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vigpm_cli::commands::{default_output_dir, run, Command};
use vigpm_cli::{CliError, ExitStatus, RunConfig};

/// Gradient projection solvers and experiments for strongly pseudomonotone
/// variational inequalities.
///
/// Exit status: 0 converged or verdict passed, 1 error, 2 iteration cap
/// reached, 3 diverged, 4 experiment verdict failed.
#[derive(Parser)]
#[command(name = "vigpm", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for traces and the summary [default: vigpm-out].
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Run the method described by the configuration.
    Solve,
    /// Constant-stepsize counter-example without Lipschitz continuity.
    ReproEx41,
    /// Divergence on an unbounded set, and its rescue by ball restriction.
    ReproEx42,
    /// Check the error-bound certificates on the problem catalog.
    VerifyBounds,
    /// Fit convergence rates for λ_k = 1/k^p.
    RateStudy {
        /// Exponents, comma separated.
        #[arg(long, value_delimiter = ',')]
        p: Option<Vec<f64>>,
    },
    /// Sample the monotonicity, Lipschitz and value-bound constants.
    EstimateConstants,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let command = match &cli.command {
        Sub::Solve => Command::Solve,
        Sub::ReproEx41 => Command::ReproEx41,
        Sub::ReproEx42 => Command::ReproEx42,
        Sub::VerifyBounds => Command::VerifyBounds,
        Sub::RateStudy { p } => Command::RateStudy { p: p.clone() },
        Sub::EstimateConstants => Command::EstimateConstants,
    };
    let output_dir = cli.output_dir.clone().unwrap_or_else(default_output_dir);
    match load(&cli).and_then(|config| run(&command, &config, &output_dir)) {
        Ok(outcome) => {
            println!("{}", outcome.line());
            ExitCode::from(outcome.status as u8)
        }
        Err(e) => {
            log::error!("{e}");
            println!("{}", serde_json::json!({ "error": e.to_string() }));
            ExitCode::from(ExitStatus::Error as u8)
        }
    }
}
