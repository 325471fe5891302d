//! `shrinkerlab`: verification suites, flows, spectra and solvers for
//! self-shrinkers, driven by flat key-value configs.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage, 3 numerical failure.

mod commands;
mod config;
mod error;
mod report;
mod surfaces;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::report::Format;

#[derive(Parser, Debug)]
#[command(name = "shrinkerlab", version, about = "Self-shrinker laboratory for mean curvature flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for reports and traces.
    #[arg(long, global = true, env = "SHRINKERLAB_OUT", default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Invariant battery over the built-in shrinker library.
    Verify,
    /// Mean curvature flow or rescaled flow of a surface.
    Flow,
    /// Lowest eigenvalues of the stability operator.
    Spectrum,
    /// Entropy by multistart maximization of F.
    Entropy,
    /// Solve for the shrinking torus and write its golden profile.
    Solve,
    /// Piecewise flow with entropy-decreasing replacements.
    Generic,
}

fn run(cli: &Cli) -> CliResult<Vec<String>> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let report = match cli.command {
        Command::Verify => commands::verify(&cfg)?,
        Command::Flow => commands::flow(&cfg)?,
        Command::Spectrum => commands::spectrum(&cfg)?,
        Command::Entropy => commands::entropy(&cfg)?,
        Command::Solve => commands::solve(&cfg)?,
        Command::Generic => commands::generic(&cfg)?,
    };
    let path = report.write(&cli.out, cli.format, &cfg.effective())?;
    let mut lines = report.summary.clone();
    lines.push(format!("report: {}", path.display()));
    for l in &lines {
        println!("{l}");
    }
    if let Some(msg) = report.failure {
        return Err(CliError::Verification(msg));
    }
    if let Some(msg) = report.numerical_failure {
        return Err(CliError::Numerical(msg));
    }
    Ok(lines)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
