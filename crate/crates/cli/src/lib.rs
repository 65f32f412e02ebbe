//! Command-line front end: reads a scenario configuration, runs it through
//! the `vacuumprobe` models and writes CSV/JSON artifacts plus a run
//! manifest into an output directory.

pub mod config;
pub mod error;
pub mod output;
pub mod scenarios;

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};

use crate::config::{Scenario, ScenarioConfig};
pub use crate::error::CliError;
use crate::output::Outputs;

#[derive(Debug, Parser)]
#[command(name = "vacuumprobe", version, about = "Vacuum birefringence imaging and resonance sensitivity scenarios")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Scenario configuration (TOML, or JSON for a `.json` file).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory [default: config `out_dir`, else `out`].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Seed for synthetic draws [default: config `seed`, else 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads, a count or `auto`.
    #[arg(long, global = true, env = "VACUUMPROBE_THREADS", default_value = "auto")]
    pub threads: Threads,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Focal-plane image of a phase object, line profiles and slit pattern.
    Image,
    /// Fit the template scale κ to a seeded synthetic measurement.
    Fit,
    /// Yield, required photons and mass reach, optionally over a sweep.
    Sensitivity,
    /// Final-state kinematics of the quasi-parallel collision.
    Kinematics,
    /// Report for the tabulated imaging parameters.
    Table1,
}

impl Command {
    pub fn scenario(self) -> Scenario {
        match self {
            Command::Image => Scenario::Image,
            Command::Fit => Scenario::Fit,
            Command::Sensitivity => Scenario::Sensitivity,
            Command::Kinematics => Scenario::Kinematics,
            Command::Table1 => Scenario::Table1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threads {
    Auto,
    Count(usize),
}

impl FromStr for Threads {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Threads::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Threads::Count(n)),
            _ => Err(format!("expected a positive thread count or `auto`, got `{s}`")),
        }
    }
}

fn configure_threads(threads: Threads) {
    let builder = match threads {
        Threads::Auto => rayon::ThreadPoolBuilder::new(),
        Threads::Count(n) => rayon::ThreadPoolBuilder::new().num_threads(n),
    };
    // Only the first call in a process takes effect.
    if let Err(e) = builder.build_global() {
        log::debug!("thread pool already configured: {e}");
    }
}

/// Run one scenario from an already loaded configuration.
pub fn run_scenario(scenario: Scenario, cfg: &ScenarioConfig, seed: u64, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if let Some(s) = cfg.scenario {
        if s != scenario {
            return Err(CliError::Validation(format!(
                "scenario: configuration is for `{}` but `{}` was requested",
                s.name(),
                scenario.name()
            )));
        }
    }
    let mut out = Outputs::new(out_dir);
    scenarios::execute(scenario, cfg, seed, &mut out)?;
    Ok(out.paths())
}

/// Entry point behind the binary. Returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    configure_threads(cli.threads);
    let cfg = match &cli.config {
        Some(path) => config::load(path)?,
        None => ScenarioConfig::empty(),
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let out = cli.out.clone().or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    log::info!("running {} into {}", cli.command.scenario().name(), out.display());
    run_scenario(cli.command.scenario(), &cfg, seed, &out)
}
