use std::io::Write;
use std::time::{Duration, Instant};

use clap::Args;
use kforr::datagen::{candidate_rng, sample_random_instance};
use kforr::forrelation::{
    build_circuit, fixed_ansatz_state, parameterized_gate_count, phi_circuit,
};
use serde::Serialize;

use crate::error::CliError;

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 4)]
    n_min: usize,
    /// Largest n timed.
    #[arg(long, default_value_t = 14)]
    n_max: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Best-of repetitions per measurement.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Serialize)]
struct Row {
    n: usize,
    k: usize,
    direct_gates: usize,
    ansatz_parameterized_gates: usize,
    phi_circuit_ms: f64,
    fixed_ansatz_ms: f64,
}

fn best_of<T>(repeats: usize, mut f: impl FnMut() -> T) -> f64 {
    (0..repeats)
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(f());
            t.elapsed()
        })
        .min()
        .unwrap_or(Duration::ZERO)
        .as_secs_f64()
        * 1e3
}

pub fn run(args: &BenchArgs, _verbose: u8, out: &mut impl Write) -> Result<(), CliError> {
    if args.n_min < 3 || args.n_min > args.n_max || args.k == 0 || args.repeats == 0 {
        return Err(CliError::Usage(
            "need 3 <= --n-min <= --n-max, --k >= 1 and --repeats >= 1".into(),
        ));
    }
    for n in args.n_min..=args.n_max {
        let inst = sample_random_instance(n, args.k, &mut candidate_rng(args.seed, n as u64))?;
        let sample = inst.encode();
        phi_circuit(&inst)?;
        let row = Row {
            n,
            k: args.k,
            direct_gates: build_circuit(&inst).len(),
            ansatz_parameterized_gates: parameterized_gate_count(n, args.k),
            phi_circuit_ms: best_of(args.repeats, || phi_circuit(&inst)),
            fixed_ansatz_ms: best_of(args.repeats, || fixed_ansatz_state(&sample)),
        };
        writeln!(
            out,
            "{}",
            serde_json::to_string(&row).expect("row serializes")
        )?;
    }
    Ok(())
}
