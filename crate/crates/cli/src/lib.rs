//! Command-line harness: scenario generation, solving, sweeps, oracle checks
//! and manifest replay.

pub mod check;
pub mod gen;
pub mod manifest;
pub mod replay;
pub mod solve;
pub mod svg;
pub mod sweep;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sinflow::benders::MasterBackend;
use sinflow::milp::Scheme;

pub use check::CheckArgs;
pub use gen::GenArgs;
pub use replay::ReplayArgs;
pub use solve::SolveArgs;
pub use sweep::SweepArgs;

#[derive(Debug, Parser)]
#[command(name = "sinflow", version, about = "Benders decomposition with a QUBO master for satellite network flow placement")]
pub struct Cli {
    /// Directory for all outputs.
    #[arg(long, global = true, env = "SINFLOW_OUT_DIR", default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Write a synthetic scenario.
    Gen(GenArgs),
    /// Solve a scenario and write the report, convergence log and cuts.
    Solve(SolveArgs),
    /// Sweep one scenario parameter across all schemes.
    Sweep(SweepArgs),
    /// Run the oracle suites on small instances.
    Check(CheckArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

impl Command {
    /// Scenario file the command reads, if any.
    pub fn scenario(&self) -> Option<&std::path::Path> {
        match self {
            Command::Solve(a) => Some(&a.scenario),
            Command::Sweep(a) => Some(&a.scenario),
            Command::Check(a) => a.scenario.as_deref(),
            Command::Gen(_) | Command::Replay(_) => None,
        }
    }
}

/// Process exit status: 0 success, 1 error or failed check, 2 budget stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok,
    Failed,
    Budget,
}

impl Exit {
    pub fn code(self) -> i32 {
        match self {
            Exit::Ok => 0,
            Exit::Failed => 1,
            Exit::Budget => 2,
        }
    }

    /// The worse of two statuses, errors first.
    pub fn max(self, other: Exit) -> Exit {
        match (self, other) {
            (Exit::Failed, _) | (_, Exit::Failed) => Exit::Failed,
            (Exit::Budget, _) | (_, Exit::Budget) => Exit::Budget,
            _ => Exit::Ok,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Hqcbd,
    Multicut,
    ClassicalBd,
    Monolithic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Master {
    Sa,
    Brute,
    Bnb,
}

impl From<Master> for MasterBackend {
    fn from(m: Master) -> Self {
        match m {
            Master::Sa => MasterBackend::Sa,
            Master::Brute => MasterBackend::BruteForce,
            Master::Bnb => MasterBackend::Bnb,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeArg {
    Uvnfr,
    Lvnf,
    Fvnf,
    Hu,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Uvnfr => Scheme::Full,
            SchemeArg::Lvnf => Scheme::Lvnf,
            SchemeArg::Fvnf => Scheme::Fvnf,
            SchemeArg::Hu => Scheme::Hu,
        }
    }
}

impl SchemeArg {
    pub fn all() -> [SchemeArg; 4] {
        [SchemeArg::Uvnfr, SchemeArg::Lvnf, SchemeArg::Fvnf, SchemeArg::Hu]
    }
}

pub fn run(cli: &Cli) -> Result<Exit> {
    execute(&cli.command, &cli.out)
}

pub fn execute(command: &Command, out: &std::path::Path) -> Result<Exit> {
    match command {
        Command::Gen(a) => gen::run(a, out),
        Command::Solve(a) => solve::run(a, out),
        Command::Sweep(a) => sweep::run(a, out),
        Command::Check(a) => check::run(a, out),
        Command::Replay(a) => replay::run(a, out),
    }
}

/// Parse `args` (program name first) and run; errors print and map to 1.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(exit) => exit.code(),
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
