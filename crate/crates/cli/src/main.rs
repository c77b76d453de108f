//! `mfg`: configuration-driven front end for the mean field game solvers.
//!
//! Exit codes: 0 success, 1 invalid configuration, 2 solver did not
//! converge, 3 Monte Carlo oracles disagree.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{parse_list, Outcome, Run};
use config::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(name = "mfg", version, about = "Mean field games with a resetting action")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment configuration; built-in demo defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Master seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated thresholds for theta-sweep, oracle-compare and ergodicity.
    #[arg(long, global = true)]
    thetas: Option<String>,
    /// Comma-separated effort costs for r-sweep.
    #[arg(long = "r-values", global = true)]
    r_values: Option<String>,
    /// Comma-separated population sizes for nplayer.
    #[arg(long = "n-list", global = true)]
    n_list: Option<String>,
    /// Finite horizon T (overrides `model.horizon`).
    #[arg(long, global = true)]
    horizon: Option<usize>,
    /// Comma-separated initial states for ergodicity.
    #[arg(long, global = true)]
    initials: Option<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Finite-horizon mean-field equilibrium by damped fixed-point iteration.
    Finite,
    /// Stationary equilibrium and the uniqueness scan of h(z).
    Stationary,
    /// Stationary mean z(θ) over a grid of thresholds.
    ThetaSweep,
    /// Optimal threshold of the auxiliary problem over effort costs r.
    RSweep,
    /// ε-Nash gap of the mean-field policy in finite populations.
    Nplayer,
    /// Power iteration, regeneration and long-path estimates of z(θ).
    OracleCompare,
    /// Total-variation decay towards the invariant law.
    Ergodicity,
}

impl Cli {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(out) = &self.out {
            c.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        if let Some(h) = self.horizon {
            c.model.horizon = h;
        }
        if let Some(s) = &self.thetas {
            let thetas: Vec<f64> = parse_list(s)?;
            c.sweeps.thetas = thetas.clone();
            c.sweeps.oracle_thetas = thetas.clone();
            c.sweeps.ergodicity_thetas = thetas;
        }
        if let Some(s) = &self.r_values {
            c.sweeps.r_values = parse_list(s)?;
        }
        if let Some(s) = &self.n_list {
            c.sweeps.n_list = parse_list(s)?;
        }
        if let Some(s) = &self.initials {
            c.sweeps.initials = parse_list(s)?;
        }
        c.validate()?;
        Ok(c)
    }

    fn execute(&self) -> anyhow::Result<Outcome> {
        let config = match self.resolve() {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: invalid configuration: {e:#}");
                return Ok(Outcome::Invalid);
            }
        };
        if let Some(k) = self.threads {
            rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
        }
        let run = Run::prepare(config)?;
        match self.command {
            Command::Finite => commands::finite(&run),
            Command::Stationary => commands::stationary(&run),
            Command::ThetaSweep => commands::theta_sweep_cmd(&run),
            Command::RSweep => commands::r_sweep(&run),
            Command::Nplayer => commands::nplayer(&run),
            Command::OracleCompare => commands::oracle_compare(&run),
            Command::Ergodicity => commands::ergodicity(&run),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = cli.execute().unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        Outcome::of_error(&e)
    });
    ExitCode::from(outcome.code())
}
