//! Command-line front end: `peridyn <subcommand> [--config PATH] [--out DIR]
//! [--tolerance-scale FLOAT]`.
//!
//! Exit status is 0 when every check passes, 1 when a check fails and 2 when
//! the configuration is invalid or a stage errors out.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use peridyn::config::{load_config, RunConfig};
use peridyn::run::{run, Command};

#[derive(Parser)]
#[command(name = "peridyn", version, about = "Nonlocal wave propagation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Kernel, dispersion and operator self-checks.
    Validate(Common),
    /// Tabulate the dispersion function and the multiplier psi.
    Dispersion(Common),
    /// Evolve initial data on a periodic grid and audit energy.
    Evolve(Common),
    /// Energy density along rays and fitted decay exponents.
    RayScan(Common),
    /// Off-cone tails of the regularised kernels b_j.
    Kernels(Common),
    /// Contrast with the classical wave equation.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file; defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Multiplies every accuracy tolerance (overrides the config value).
    #[arg(long, value_name = "FLOAT")]
    tolerance_scale: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Sub::Validate(c) => (Command::Validate, c),
        Sub::Dispersion(c) => (Command::Dispersion, c),
        Sub::Evolve(c) => (Command::Evolve, c),
        Sub::RayScan(c) => (Command::RayScan, c),
        Sub::Kernels(c) => (Command::Kernels, c),
        Sub::Compare(c) => (Command::Compare, c),
    };
    let mut config = match &common.config {
        Some(path) => match load_config(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => RunConfig::default(),
    };
    if let Some(s) = common.tolerance_scale {
        if !(s.is_finite() && s > 0.0) {
            eprintln!("error: --tolerance-scale must be a positive number, got {s}");
            return ExitCode::from(2);
        }
        config.tolerance_scale = s;
    }
    match run(command, &config, &common.out) {
        Ok(summary) => {
            for c in &summary.checks {
                let verdict = if c.passed { "PASS" } else { "FAIL" };
                println!(
                    "{verdict} {} value={:e} threshold={}",
                    c.name,
                    c.value,
                    c.threshold.map_or("-".into(), |t| format!("{t:e}"))
                );
            }
            println!(
                "{}: {} (outputs in {})",
                command.name(),
                if summary.passed { "passed" } else { "failed" },
                common.out.display()
            );
            if summary.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
