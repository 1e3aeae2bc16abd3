//! `res`: simulation, analysis, evaluation, bootstrap and calibration runs for
//! rare-event-stable classification metrics. Each run writes a `manifest.json`
//! that can be fed back through `--config` to reproduce it.

mod cmd;
mod config;
mod error;
mod manifest;

use clap::{Parser, Subcommand};

use cmd::{analyze::AnalyzeArgs, bootstrap::BootstrapArgs, calibrate::CalibrateArgs, evaluate::EvaluateArgs, simulate::SimulateArgs};

#[derive(Parser, Debug)]
#[command(name = "res", version, about = "Rare-event-stable metrics: simulation, evaluation and calibration")]
struct Cli {
    /// Worker threads; outputs do not depend on it
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo grid over score regimes and prevalences
    Simulate(SimulateArgs),
    /// Analytic first-order conditions, interior roots and implied trade-offs
    Analyze(AnalyzeArgs),
    /// Optimal thresholds of a scores file
    Evaluate(EvaluateArgs),
    /// Prevalence regimes of a scores file and their bootstrap threshold stability
    Bootstrap(BootstrapArgs),
    /// Calibrate the policy parameter alpha
    Calibrate(CalibrateArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(error::ConfigError::Invalid("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Simulate(a) => cmd::simulate::run(a),
        Command::Analyze(a) => cmd::analyze::run(a),
        Command::Evaluate(a) => cmd::evaluate::run(a),
        Command::Bootstrap(a) => cmd::bootstrap::run(a),
        Command::Calibrate(a) => cmd::calibrate::run(a),
    }
}

fn main() {
    // clap exits with 2 on usage errors by itself
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(error::exit_code(&e));
    }
}
