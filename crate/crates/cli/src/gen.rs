use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use kforr::datagen::{generate_dataset, write_dataset, DatagenError, Dataset, DatasetSpec};

use crate::error::CliError;

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Input bits per function.
    #[arg(long)]
    n: usize,
    /// Number of functions; odd and at least 3.
    #[arg(long)]
    k: usize,
    /// Positive samples.
    #[arg(long, default_value_t = 0)]
    pos: usize,
    /// Negative samples.
    #[arg(long, default_value_t = 0)]
    neg: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Candidates drawn before falling back to constructive samples.
    #[arg(long, default_value_t = 100_000)]
    max_tries: usize,
    /// Dataset file to write.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: &GenArgs, verbose: u8, out: &mut impl Write) -> Result<(), CliError> {
    let spec = DatasetSpec {
        n: args.n,
        k: args.k,
        count_pos: args.pos,
        count_neg: args.neg,
        seed: args.seed,
        max_rejection_tries: args.max_tries,
    };
    spec.validate().map_err(|e| match e {
        DatagenError::InvalidK(_) | DatagenError::TooFewBits(_) => CliError::Usage(e.to_string()),
        other => other.into(),
    })?;
    let (samples, report) = generate_dataset(&spec)?;
    write_dataset(
        &Dataset {
            spec: Some(spec),
            samples,
        },
        &args.out,
    )?;
    if verbose > 0 {
        eprintln!(
            "wrote {} samples to {} ({} tries, {} constructive)",
            args.pos + args.neg,
            args.out.display(),
            report.tries,
            report.constructive_pos + report.constructive_neg
        );
    }
    writeln!(out, "{}", serde_json::json!({ "report": report }))?;
    Ok(())
}
