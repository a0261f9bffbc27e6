use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use kforr::classify::{
    qsvm_classify, qsvm_decision_value, qsvm_train, vqc_decide, vqc_probability, DualSolution,
    Label, Mode, VqcModel, DEFAULT_BOX_C,
};
use kforr::datagen::{make_negative_sample, make_positive_sample, read_dataset, LabeledSample};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Vqc,
    Qsvm,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    /// Dataset file produced by `gen`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Model::Vqc)]
    mode: Model,
    /// Estimate probabilities from this many shots instead of exact amplitudes.
    #[arg(long)]
    shots: Option<usize>,
    /// Base seed for sampled mode; sample i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the default bias.
    #[arg(long, allow_hyphen_values = true)]
    bias: Option<f64>,
    /// QSVM box constraint.
    #[arg(long, default_value_t = DEFAULT_BOX_C)]
    box_c: f64,
}

#[derive(Serialize)]
struct Prediction<'a> {
    index: usize,
    bits: String,
    label: i8,
    predicted: i8,
    score: f64,
    provenance: &'a str,
}

#[derive(Serialize)]
struct Summary {
    mode: Model,
    samples: usize,
    correct: usize,
    accuracy: Option<f64>,
    shots: Option<usize>,
    seed: u64,
    bias: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
}

enum Classifier {
    Vqc(VqcModel),
    Qsvm(DualSolution),
}

impl Classifier {
    fn bias(&self) -> f64 {
        match self {
            Classifier::Vqc(m) => m.bias(),
            Classifier::Qsvm(s) => s.bias,
        }
    }

    fn score(&self, s: &LabeledSample, mode: Mode) -> Result<(f64, Label), CliError> {
        Ok(match self {
            Classifier::Vqc(m) => {
                let p = vqc_probability(&s.sample, mode)?;
                (p, vqc_decide(p, m.bias()))
            }
            Classifier::Qsvm(sol) => (
                qsvm_decision_value(&s.sample, sol, mode)?,
                qsvm_classify(&s.sample, sol, mode)?,
            ),
        })
    }
}

fn sample_mode(args: &ClassifyArgs, index: usize) -> Mode {
    match args.shots {
        None => Mode::Exact,
        Some(shots) => Mode::Sampled {
            shots,
            seed: args.seed.wrapping_add(index as u64),
        },
    }
}

pub fn run(args: &ClassifyArgs, verbose: u8, out: &mut impl Write) -> Result<(), CliError> {
    if args.shots == Some(0) {
        return Err(CliError::Usage("--shots must be positive".into()));
    }
    let dataset = read_dataset(&args.input)?;
    let shape = dataset.spec.map(|s| (s.n, s.k)).or_else(|| {
        dataset
            .samples
            .first()
            .map(|s| (s.sample.n(), s.sample.k()))
    });

    let classifier = match args.mode {
        Model::Vqc => {
            let model = match args.bias {
                Some(b) => {
                    VqcModel::new(b, Mode::Exact).map_err(|e| CliError::Usage(e.to_string()))?
                }
                None => VqcModel::default_for_forrelation(Mode::Exact),
            };
            Classifier::Vqc(model)
        }
        Model::Qsvm => {
            let (n, k) = shape
                .ok_or_else(|| CliError::Data("empty dataset has no shape to train on".into()))?;
            let x_plus = make_positive_sample(n, k, (1, 2, 3))?;
            let x_minus = make_negative_sample(n, k, 1, [1, 2, 3])?;
            let mut sol = qsvm_train(&x_plus.sample, &x_minus.sample, args.box_c)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            if let Some(b) = args.bias {
                sol = sol.with_bias(b);
            }
            if verbose > 0 {
                eprintln!(
                    "trained on constructive pair: alpha = {}, bias = {}",
                    sol.alpha, sol.bias
                );
            }
            Classifier::Qsvm(sol)
        }
    };

    let scored = dataset
        .samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| classifier.score(s, sample_mode(args, i)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut correct = 0;
    for (i, (s, (score, predicted))) in dataset.samples.iter().zip(&scored).enumerate() {
        correct += usize::from(*predicted == s.label);
        let p = Prediction {
            index: i,
            bits: s.sample.bit_string(),
            label: s.label.as_i8(),
            predicted: predicted.as_i8(),
            score: *score,
            provenance: s.provenance.as_str(),
        };
        writeln!(
            out,
            "{}",
            serde_json::to_string(&p).expect("prediction serializes")
        )?;
    }
    let total = dataset.samples.len();
    let summary = Summary {
        mode: args.mode,
        samples: total,
        correct,
        accuracy: (total > 0).then(|| correct as f64 / total as f64),
        shots: args.shots,
        seed: args.seed,
        bias: classifier.bias(),
        alpha: match &classifier {
            Classifier::Qsvm(s) => Some(s.alpha),
            Classifier::Vqc(_) => None,
        },
    };
    writeln!(out, "{}", serde_json::json!({ "summary": summary }))?;
    Ok(())
}
