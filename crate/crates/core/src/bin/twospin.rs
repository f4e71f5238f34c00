use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use twospin::cli::{exit_code, run, Command, Invocation};

/// Integrable two-species spin clusters: certification, exact spectra and Bethe ansatz.
#[derive(Parser)]
#[command(name = "twospin", version)]
struct Args {
    #[command(subcommand)]
    command: Verb,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the configured one).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Largest number of Bethe roots.
    #[arg(long, global = true)]
    nmax: Option<usize>,
    /// Coupling set (TOML or JSON) to use instead of the configured parameters.
    #[arg(long, global = true)]
    from_couplings: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// Yang-Baxter, RLL, commutativity and Hamiltonian checks.
    Verify,
    /// Exact diagonalization by total S^z sector.
    Spectrum,
    /// Solve the Bethe equations and compare with the exact spectrum.
    Bethe,
    /// Interaction graph in DOT format.
    Graph,
    /// Recover integrable parameters from a coupling set.
    Fit,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let Some(config) = args.config else {
        eprintln!("error: --config is required");
        return ExitCode::from(2);
    };
    if let Ok(n) = std::env::var("TWOSPIN_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: TWOSPIN_THREADS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }
    let command = match args.command {
        Verb::Verify => Command::Verify,
        Verb::Spectrum => Command::Spectrum,
        Verb::Bethe => Command::Bethe,
        Verb::Graph => Command::Graph,
        Verb::Fit => Command::Fit,
    };
    let inv = Invocation {
        command,
        config,
        out: args.out,
        nmax: args.nmax,
        from_couplings: args.from_couplings,
    };
    match run(&inv) {
        Ok(o) => {
            for w in &o.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", o.summary);
            ExitCode::from(o.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
