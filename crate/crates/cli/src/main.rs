use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Debug, Parser)]
#[command(
    name = "lcnorm",
    version,
    about = "Residue norms and minimal extensions on P^n models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reproduce one of the shipped examples and check its claims.
    Example {
        #[arg(value_enum)]
        name: Example,
        #[command(flatten)]
        common: Common,
    },
    /// Residue profile over an eps grid: CSV and SVG.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Section to evaluate (default: the first one in the model).
        #[arg(long)]
        section: Option<String>,
        /// Logarithmic eps axis in the chart.
        #[arg(long)]
        log_x: bool,
    },
    /// Gram matrices at eps = 0 and eps = 1 of the model's sections.
    Gram {
        #[command(flatten)]
        common: Common,
    },
    /// Smallest b for which the extension inequality holds.
    Cmin {
        #[command(flatten)]
        common: Common,
        /// Search range for b, as `LO,HI`.
        #[arg(long, default_value = "0.5,20")]
        b_range: String,
    },
    /// Run the invariant suite on a model.
    Check {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Example {
    #[value(name = "p3-trivial-s1")]
    TrivialS1,
    #[value(name = "p3-trivial-s2")]
    TrivialS2,
    #[value(name = "p3-o1")]
    O1,
    #[value(name = "p3-points")]
    Points,
}

impl Example {
    pub fn name(self) -> &'static str {
        match self {
            Example::TrivialS1 => "p3-trivial-s1",
            Example::TrivialS2 => "p3-trivial-s2",
            Example::O1 => "p3-o1",
            Example::Points => "p3-points",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Model file, or the name of a shipped example.
    #[arg(long)]
    model: Option<String>,
    /// Codimension of the lc centres (default: the model's maximum).
    #[arg(long)]
    sigma: Option<usize>,
    /// Log-scale b, so that ell = e^b (default: the model's).
    #[arg(long)]
    b: Option<f64>,
    /// Comma-separated eps values, or `START:STOP:COUNT`.
    #[arg(long)]
    eps_grid: Option<String>,
    /// Relative quadrature tolerance, in (0, 1e-2].
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for the randomised checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
