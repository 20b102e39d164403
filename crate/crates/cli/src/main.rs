use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use mems_cli::{run, Mode, ScenarioConfig};

/// Solvers and verification suites for u_t = Δu + λ f(x) / g(u).
#[derive(Debug, Parser)]
#[command(name = "mems", version)]
struct Cli {
    #[command(subcommand)]
    mode: Option<Command>,

    /// Scenario file with `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    lambda: Option<f64>,

    /// Number of interior grid nodes.
    #[arg(long = "grid-n", global = true)]
    grid_n: Option<usize>,

    /// Record that the run draws no random numbers.
    #[arg(long, global = true)]
    seedless: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Minimal stationary solution at a fixed λ.
    Stationary,
    /// Bisection for the pull-in voltage.
    Pullin,
    /// Analytic bounds on the pull-in voltage.
    Bounds,
    /// Time evolution until t_end or touchdown.
    Evolve,
    /// Picard sweeps on the local existence interval.
    Picard,
    /// Every acceptance check, as a pass/fail table.
    VerifyAll,
}

impl From<Command> for Mode {
    fn from(c: Command) -> Self {
        match c {
            Command::Stationary => Mode::Stationary,
            Command::Pullin => Mode::Pullin,
            Command::Bounds => Mode::Bounds,
            Command::Evolve => Mode::Evolve,
            Command::Picard => Mode::Picard,
            Command::VerifyAll => Mode::VerifyAll,
        }
    }
}

fn resolve(cli: &Cli) -> Result<ScenarioConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::from_file(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(m) = cli.mode {
        cfg.mode = Some(m.into());
    }
    if let Some(dir) = &cli.out {
        cfg.output = dir.clone();
    }
    if let Some(l) = cli.lambda {
        cfg.lambda = Some(l);
    }
    if let Some(n) = cli.grid_n {
        cfg.domain.nodes = n;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let outcome = resolve(&cli).and_then(|cfg| run(&cfg, cli.seedless, &mut std::io::stdout()));
    match outcome {
        Ok(summary) if summary.failed_assertion() => ExitCode::from(2),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
