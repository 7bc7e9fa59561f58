//! `plqp`: batch front end. Every command prints its JSON report on stdout;
//! with `--out DIR` the report and any grid files are written there together
//! with `manifest.json`.
//!
//! Exit codes: 0 success, 2 malformed input or missing file, 3 solver
//! failure on well-formed input.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use output::OutDir;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        Self { code: 2, msg: msg.into() }
    }
    pub fn solver(msg: impl Into<String>) -> Self {
        Self { code: 3, msg: msg.into() }
    }
}

impl From<plqp::PlqpError> for CliError {
    fn from(e: plqp::PlqpError) -> Self {
        if e.is_solver_failure() {
            Self::solver(e.to_string())
        } else {
            Self::input(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::input(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Radial,
    Local,
}

#[derive(Debug, Parser)]
#[command(name = "plqp", version, about = "Transport-plus-Lebesgue distances, isoperimetric flows and dynamic checks")]
struct Cli {
    /// Directory for the report, grid files and manifest.json.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distance between two grid files (`.csv`) or atom lists (`.json`).
    Dist {
        /// Transport exponent, `inf` for the bottleneck distance.
        #[arg(long, default_value = "inf")]
        q: String,
        /// Lebesgue exponent, `inf` for the sup norm.
        #[arg(long, default_value = "inf")]
        p: String,
        a: PathBuf,
        b: PathBuf,
    },
    /// Isoperimetric ratio of a grid density, optionally a Sobolev ratio.
    Isop {
        file: PathBuf,
        /// Sobolev exponent `r`, `1 < r < n`.
        #[arg(long)]
        r: Option<f64>,
    },
    /// Minimizing-movement run from a JSON config.
    Mms {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, value_enum)]
        family: Option<FamilyArg>,
        /// Candidate-order seed for the local search family.
        #[arg(long)]
        seed: Option<u64>,
        /// Cell count per axis for generated anchors.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Dynamic bound check between two grid files.
    Bb {
        #[arg(long, default_value_t = 8)]
        steps: usize,
        a: PathBuf,
        b: PathBuf,
    },
    /// Translation or dilation curve with its continuity residual.
    Curve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
        /// Also report metric-derivative quotients for this `q`.
        #[arg(long)]
        q: Option<String>,
        #[arg(long, default_value = "inf")]
        p: String,
    },
    /// Velocity reconstruction for a trajectory manifest.
    Reconstruct {
        manifest: PathBuf,
        /// `inf` for the least sup-norm field, else the `L^q` exponent.
        #[arg(long, default_value = "inf")]
        q: String,
    },
    /// Exact solvers against brute-force oracles on random instances.
    Oracle {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        count: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Dist { .. } => "dist",
            Command::Isop { .. } => "isop",
            Command::Mms { .. } => "mms",
            Command::Bb { .. } => "bb",
            Command::Curve { .. } => "curve",
            Command::Reconstruct { .. } => "reconstruct",
            Command::Oracle { .. } => "oracle",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cap = commands::atom_cap()?;
    let name = cli.command.name();
    let mut out = match &cli.out {
        Some(dir) => Some(OutDir::create(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?),
        None => None,
    };
    match commands::execute(&cli.command, cap, out.as_mut()) {
        Ok(report) => {
            if let Some(mut dir) = out {
                let root = dir.root().display().to_string();
                if let Err(e) = dir.write_json(&format!("{name}.json"), &report) {
                    dir.discard();
                    return Err(CliError::input(format!("{root}: {e}")));
                }
                dir.finish(name).map_err(|e| CliError::input(format!("{root}: {e}")))?;
            }
            print!("{}", output::to_json(&report)?);
            let failed = report.get("passed").and_then(|v| v.as_bool()) == Some(false);
            if failed {
                return Err(CliError::solver("oracle disagreement"));
            }
            Ok(())
        }
        Err(e) => {
            if let Some(dir) = out {
                dir.discard();
            }
            Err(e)
        }
    }
}
