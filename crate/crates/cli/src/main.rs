mod bench;
mod classify;
mod error;
mod gen;
mod verify;

use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use error::CliError;

/// Environment variable overriding the worker thread count.
const THREADS_ENV: &str = "KFORR_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "kforr",
    version,
    about = "k-Forrelation datasets, classifiers and checks"
)]
struct Cli {
    /// Print extra diagnostics to stderr (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a labeled dataset.
    Gen(gen::GenArgs),
    /// Classify a dataset with the VQC or QSVM decision rule.
    Classify(classify::ClassifyArgs),
    /// Run the invariant suite.
    Verify(verify::VerifyArgs),
    /// Time circuit simulation over a range of n.
    Bench(bench::BenchArgs),
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "{THREADS_ENV} must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure {threads} threads: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = match cli.command {
        Command::Gen(a) => gen::run(&a, cli.verbose, &mut out),
        Command::Classify(a) => classify::run(&a, cli.verbose, &mut out),
        Command::Verify(a) => verify::run(&a, cli.verbose, &mut out),
        Command::Bench(a) => bench::run(&a, cli.verbose, &mut out),
    };
    out.flush()?;
    result
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(error::EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kforr: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
