//! `cwspin`: landscapes, minima, transition points, symmetry checks and
//! finite-N comparisons for Curie-Weiss measurement magnets.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical failure.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use config::CommonArgs;

#[derive(Debug, Parser)]
#[command(
    name = "cwspin",
    version,
    about = "Curie-Weiss measurement-magnet thermodynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Free energy on a grid over two moments (CSV by default).
    Landscape {
        #[command(flatten)]
        common: CommonArgs,
        /// Moments spanning the grid, e.g. 1,2 (1-based).
        #[arg(long, value_delimiter = ',', num_args = 2)]
        axes: Option<Vec<usize>>,
        /// Spin 1 only: the line m1 = 0, with and without the coupling.
        #[arg(long)]
        profile: bool,
    },
    /// All local minima with their classification and orbit.
    Minima {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Spinodal and critical temperatures and the critical coupling.
    Critical {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Property checks of the cyclic symmetry on random points.
    Symcheck {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Exact finite-N free energies against the large-N minimum.
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated magnet sizes.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<u32>>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<cwspin_core::Error> for CliError {
    fn from(e: cwspin_core::Error) -> Self {
        use cwspin_core::Error as E;
        match e {
            E::NonConvergence { .. } | E::NoSolutionInBracket(_) => {
                CliError::Numerical(e.to_string())
            }
            E::TooLarge { .. } => CliError::Usage(format!(
                "{e}; pick a smaller N or spin, the enumeration grows as N^(2l)"
            )),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Landscape {
            common,
            axes,
            profile,
        } => commands::landscape(&common, axes, profile),
        Command::Minima { common } => commands::minima(&common),
        Command::Critical { common } => commands::critical(&common),
        Command::Symcheck { common } => commands::symcheck(&common),
        Command::Oracle { common, n_list } => commands::oracle(&common, n_list),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cwspin: {e}");
            ExitCode::from(e.code())
        }
    }
}
