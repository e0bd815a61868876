use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fredkin_cli::commands::{self, CoeffsArgs, FingerprintArgs, MetricsArgs, SweepArgs, SynthesizeArgs};
use fredkin_cli::verify::{self, Faults, Suite};
use fredkin_cli::{exit, CliError, Outcome, WORKERS_ENV};

/// Cavity-mediated controlled-SWAP gates: spectra, pulse metrics, circuits.
#[derive(Debug, Parser)]
#[command(name = "fredkin", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate R, T and m over a detuning grid.
    Coeffs(CoeffsArgs),
    /// Loss probability p and fidelity F at one operating point.
    Metrics(MetricsArgs),
    /// p and F over a grid of bandwidths or couplings.
    Sweep(SweepArgs),
    /// Run the invariant suites.
    Verify {
        #[arg(value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// SWAP-test overlap estimation between two registers.
    Fingerprint(FingerprintArgs),
    /// Search for gate placements around a fixed number of CSWAPs.
    Synthesize(SynthesizeArgs),
}

fn configure_workers() -> Result<(), CliError> {
    let Ok(text) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{WORKERS_ENV} must be a positive integer, got {text:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start {n} workers: {e}")))
}

fn dispatch(cli: Cli) -> Result<Outcome, CliError> {
    configure_workers()?;
    match cli.command {
        Command::Coeffs(a) => commands::coeffs(&a),
        Command::Metrics(a) => commands::metrics_cmd(&a),
        Command::Sweep(a) => commands::sweep_cmd(&a),
        Command::Verify { suite, inject_fault } => {
            Ok(verify::report(&verify::run(suite, Faults { reflection_sign: inject_fault })))
        }
        Command::Fingerprint(a) => commands::fingerprint(&a),
        Command::Synthesize(a) => {
            let (outcome, elapsed) = commands::synthesize_cmd(&a)?;
            eprintln!("elapsed: {elapsed:.3} s");
            Ok(outcome)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::SUCCESS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match dispatch(cli) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
