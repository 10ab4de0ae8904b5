//! `nisio` command line: runs envelope computations and diagnostics from a TOML
//! configuration and writes CSV tables and JSON reports.
//!
//! Exit status: 0 when every enabled assertion passes, 1 when one fails,
//! 2 for an invalid configuration or input, 3 for a numerical degeneracy.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use crate::config::Setup;
use crate::run::Command;

#[derive(Parser, Debug)]
#[command(name = "nisio", version, about = "Envelopes of Markov semigroup families")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for Monte Carlo and randomized property checks.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "NISIO_THREADS")]
    threads: Option<usize>,
}

enum Failure {
    Input(anyhow::Error),
    Degenerate(anyhow::Error),
}

fn classify(e: anyhow::Error) -> Failure {
    let degenerate = e
        .chain()
        .any(|c| matches!(c.downcast_ref::<nisio::Error>(), Some(nisio::Error::NumericalDegeneracy(_))));
    if degenerate {
        Failure::Degenerate(e)
    } else {
        Failure::Input(e)
    }
}

fn execute(cli: &Cli) -> Result<bool, Failure> {
    let prepare = || -> anyhow::Result<(Setup, PathBuf)> {
        if let Some(n) = cli.threads {
            anyhow::ensure!(n > 0, "--threads must be at least 1");
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
        let text = std::fs::read_to_string(&cli.config).with_context(|| format!("reading {}", cli.config.display()))?;
        let base = cli.config.parent().map(PathBuf::from).unwrap_or_default();
        let setup = Setup::parse(&text, &base, cli.seed)?;
        run::required_section(cli.command, &setup)?;
        let dir = cli
            .out
            .clone()
            .or_else(|| setup.config.output.dir.as_ref().map(|d| base.join(d)))
            .context("no output directory: pass --out or set output.dir")?;
        Ok((setup, dir))
    };
    let (setup, dir) = prepare().map_err(Failure::Input)?;
    let checks = run::run(cli.command, &setup, &dir).map_err(classify)?;
    for c in &checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Degenerate(e)) => {
            eprintln!("numerical degeneracy: {e:#}");
            ExitCode::from(3)
        }
    }
}
