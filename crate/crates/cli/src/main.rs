use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use psff_cli::{diagnostic, run, CliError, Command, RunConfig};

/// Partial spectral form factor of dual-unitary brickwork circuits.
#[derive(Parser)]
#[command(name = "psff", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Disorder-averaged PSFF from exact diagonalization of finite rings.
    PsffFinite(Invocation),
    /// PSFF of the infinite chain from the permutation calculus.
    PsffTdl(Invocation),
    /// Random-matrix and Poisson reference curves.
    Reference(Invocation),
    /// Unitarity and dual-unitarity certificates for sampled gates.
    VerifyGates(Invocation),
    /// Transfer-operator certificates as JSON.
    VerifyTransfer(Invocation),
    /// Thermodynamic-limit deviation from CUE against its bound.
    DeviationReport(Invocation),
}

#[derive(Args)]
struct Invocation {
    /// JSON file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: RunConfig,
}

fn split(sub: Sub) -> (Command, Invocation) {
    match sub {
        Sub::PsffFinite(i) => (Command::PsffFinite, i),
        Sub::PsffTdl(i) => (Command::PsffTdl, i),
        Sub::Reference(i) => (Command::Reference, i),
        Sub::VerifyGates(i) => (Command::VerifyGates, i),
        Sub::VerifyTransfer(i) => (Command::VerifyTransfer, i),
        Sub::DeviationReport(i) => (Command::DeviationReport, i),
    }
}

fn configure(command: Command, inv: &Invocation) -> Result<RunConfig, CliError> {
    let base = match &inv.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    base.overlay(&inv.flags).resolve(command)
}

fn set_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("PSFF_THREADS") {
        let n: usize = v.parse().map_err(|_| CliError::Config(format!("PSFF_THREADS={v} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, inv) = split(cli.command);
    let cfg = match set_threads().and_then(|_| configure(command, &inv)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&cfg) {
        Ok(summary) => {
            eprintln!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            match &e {
                CliError::Numeric(_) => eprintln!("{}", diagnostic(&cfg, &e)),
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
