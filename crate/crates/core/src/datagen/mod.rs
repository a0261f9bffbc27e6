//! Labeled k-Forrelation datasets.
//!
//! Test instances are rejection-sampled from the uniform distribution over
//! function forms and labeled from the exact Φ. When a class cannot be filled
//! within the try budget, the remainder is made of constructive samples and the
//! report says how many.

mod io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::Label;
use crate::forrelation::{
    circuit_state, phi_circuit, BooleanFunction, EncodedSample, ForrelationError,
    ForrelationInstance,
};
use crate::qstate::{QStateError, QubitSet};

pub use io::{read_dataset, write_dataset, Dataset};

/// Φ ≥ 3/5 is a positive instance.
pub const POSITIVE_THRESHOLD: f64 = 3.0 / 5.0;
/// |Φ| ≤ 1/100 is a negative instance.
pub const NEGATIVE_THRESHOLD: f64 = 1.0 / 100.0;
/// Redraws allowed before a 3-bit function is forced into a random instance.
pub const MAX_REDRAWS: usize = 1000;
/// Tolerance for the constructive post-conditions.
pub const CONSTRUCTIVE_TOLERANCE: f64 = 1e-12;

const BATCH: usize = 512;
const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error(transparent)]
    Forrelation(#[from] ForrelationError),
    #[error(transparent)]
    Simulator(#[from] QStateError),
    #[error("k must be odd and at least 3, got {0}")]
    InvalidK(usize),
    #[error("n must be at least 3 for a 3-bit function, got {0}")]
    TooFewBits(usize),
    #[error("bit index {index} outside [1, {n}]")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("indices must be distinct: {0:?}")]
    RepeatedIndex(Vec<usize>),
    #[error("constructive {label} sample failed its check (probability {probability})")]
    ConstructiveCheck { label: Label, probability: f64 },
    #[error("need {needed} constructive {label} samples but only {available} exist for n = {n}")]
    InsufficientConstructive {
        label: Label,
        needed: usize,
        available: usize,
        n: usize,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DatagenError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Constructive,
    RejectionSampled,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Constructive => "constructive",
            Provenance::RejectionSampled => "rejection_sampled",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "constructive" => Some(Provenance::Constructive),
            "rejection_sampled" => Some(Provenance::RejectionSampled),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub sample: EncodedSample,
    pub label: Label,
    /// Exact Φ used for labeling.
    pub phi: f64,
    pub provenance: Provenance,
}

/// The promise class of Φ, or `None` inside the gap (1/100, 3/5).
pub fn promise_label(phi: f64) -> Option<Label> {
    if phi >= POSITIVE_THRESHOLD {
        Some(Label::Positive)
    } else if phi.abs() <= NEGATIVE_THRESHOLD {
        Some(Label::Negative)
    } else {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub n: usize,
    pub k: usize,
    pub count_pos: usize,
    pub count_neg: usize,
    pub seed: u64,
    pub max_rejection_tries: usize,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        check_k(self.k)?;
        check_n(self.n)
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 3 || k.is_multiple_of(2) {
        return Err(DatagenError::InvalidK(k));
    }
    Ok(())
}

fn check_n(n: usize) -> Result<()> {
    if n < 3 {
        return Err(DatagenError::TooFewBits(n));
    }
    Ok(())
}

fn check_indices(n: usize, indices: &[usize]) -> Result<()> {
    if let Some(&index) = indices.iter().find(|&&i| i == 0 || i > n) {
        return Err(DatagenError::IndexOutOfRange { index, n });
    }
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != indices.len() {
        return Err(DatagenError::RepeatedIndex(indices.to_vec()));
    }
    Ok(())
}

fn constant_padded(n: usize, k: usize, leading: &[BooleanFunction]) -> Result<ForrelationInstance> {
    let mut functions = leading.to_vec();
    functions.resize(k, BooleanFunction::CONSTANT);
    Ok(ForrelationInstance::new(n, functions)?)
}

/// f₁ = f₃ = (−1)^{x_i x_j x_l}, all other functions constant; maps |0^n⟩ to itself.
pub fn make_positive_sample(
    n: usize,
    k: usize,
    triple: (usize, usize, usize),
) -> Result<LabeledSample> {
    check_k(k)?;
    check_n(n)?;
    let (i, j, l) = triple;
    check_indices(n, &[i, j, l])?;
    let f = BooleanFunction::new(&[i, j, l])?;
    let inst = constant_padded(n, k, &[f, BooleanFunction::CONSTANT, f])?;
    let p0 = circuit_state(&inst)?.probability(0);
    if (p0 - 1.0).abs() > CONSTRUCTIVE_TOLERANCE {
        return Err(DatagenError::ConstructiveCheck {
            label: Label::Positive,
            probability: p0,
        });
    }
    Ok(LabeledSample {
        sample: inst.encode(),
        label: Label::Positive,
        phi: 1.0,
        provenance: Provenance::Constructive,
    })
}

/// f₁ = (−1)^{x_j}, f₂ a 3-bit product, all other functions constant; maps
/// |0^n⟩ to the basis state with only bit j set.
pub fn make_negative_sample(
    n: usize,
    k: usize,
    j: usize,
    three_bits: [usize; 3],
) -> Result<LabeledSample> {
    check_k(k)?;
    check_n(n)?;
    check_indices(n, &[j])?;
    check_indices(n, &three_bits)?;
    let inst = constant_padded(
        n,
        k,
        &[
            BooleanFunction::new(&[j])?,
            BooleanFunction::new(&three_bits)?,
        ],
    )?;
    let p = circuit_state(&inst)?.probability(1 << (j - 1));
    if (p - 1.0).abs() > CONSTRUCTIVE_TOLERANCE {
        return Err(DatagenError::ConstructiveCheck {
            label: Label::Negative,
            probability: p,
        });
    }
    Ok(LabeledSample {
        sample: inst.encode(),
        label: Label::Negative,
        phi: 0.0,
        provenance: Provenance::Constructive,
    })
}

/// All qubit sets of size ≤ 3 over n bits, the constant function first.
pub fn function_forms(n: usize) -> Vec<QubitSet> {
    let mut forms = vec![QubitSet::EMPTY];
    forms.extend(crate::forrelation::ansatz_slots(n));
    forms
}

fn triples(n: usize) -> impl Iterator<Item = [usize; 3]> {
    (1..=n).flat_map(move |a| (a + 1..=n).flat_map(move |b| (b + 1..=n).map(move |c| [a, b, c])))
}

/// Each function uniform over [`function_forms`]. The whole instance is redrawn
/// until some function has exactly three bits; after [`MAX_REDRAWS`] attempts a
/// uniformly chosen function is replaced by a uniformly chosen 3-bit product.
pub fn sample_random_instance<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<ForrelationInstance> {
    check_n(n)?;
    if k == 0 {
        return Err(ForrelationError::NoFunctions.into());
    }
    let forms = function_forms(n);
    let draw = |rng: &mut R| -> Vec<BooleanFunction> {
        (0..k)
            .map(|_| {
                BooleanFunction::from_set(forms[rng.gen_range(0..forms.len())])
                    .expect("forms have ≤ 3 bits")
            })
            .collect()
    };
    let mut functions = draw(rng);
    let mut redraws = 0;
    while !functions.iter().any(|f| f.arity() == 3) {
        if redraws == MAX_REDRAWS {
            let three: Vec<[usize; 3]> = triples(n).collect();
            let t = three[rng.gen_range(0..three.len())];
            functions[rng.gen_range(0..k)] = BooleanFunction::new(&t)?;
            break;
        }
        functions = draw(rng);
        redraws += 1;
    }
    Ok(ForrelationInstance::new(n, functions)?)
}

/// Summary of every Φ evaluated during rejection sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiHistogram {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    /// Equal-width bins over [-1, 1].
    pub bins: Vec<usize>,
}

impl PhiHistogram {
    fn new() -> Self {
        PhiHistogram {
            min: None,
            max: None,
            mean: None,
            bins: vec![0; HISTOGRAM_BINS],
        }
    }

    fn summarize(values: &[f64]) -> Self {
        let mut h = Self::new();
        if values.is_empty() {
            return h;
        }
        for &v in values {
            let b = (((v + 1.0) / 2.0) * HISTOGRAM_BINS as f64).floor();
            h.bins[(b.max(0.0) as usize).min(HISTOGRAM_BINS - 1)] += 1;
        }
        h.min = values.iter().copied().reduce(f64::min);
        h.max = values.iter().copied().reduce(f64::max);
        h.mean = Some(values.iter().sum::<f64>() / values.len() as f64);
        h
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    /// Candidates drawn and evaluated.
    pub tries: usize,
    pub accepted_pos: usize,
    pub accepted_neg: usize,
    /// Candidates with Φ in the excluded band.
    pub in_gap: usize,
    /// Promise candidates dropped because their class was already full.
    pub surplus: usize,
    pub acceptance_rate_pos: f64,
    pub acceptance_rate_neg: f64,
    pub constructive_pos: usize,
    pub constructive_neg: usize,
    pub sampling: String,
    pub phi: PhiHistogram,
}

/// Independent RNG for candidate `t`: stream `t` of the seeded generator.
pub fn candidate_rng(seed: u64, t: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t);
    rng
}

fn candidate(spec: &DatasetSpec, t: usize) -> Result<(ForrelationInstance, f64)> {
    let inst = sample_random_instance(spec.n, spec.k, &mut candidate_rng(spec.seed, t as u64))?;
    let phi = phi_circuit(&inst)?.value();
    Ok((inst, phi))
}

/// Rejection sampling plus constructive fill. Candidates are evaluated in
/// parallel but accepted in index order, so the output depends only on `spec`.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<(Vec<LabeledSample>, GenerationReport)> {
    spec.validate()?;
    let mut samples = Vec::with_capacity(spec.count_pos + spec.count_neg);
    let (mut pos, mut neg, mut in_gap, mut surplus, mut tries) = (0, 0, 0, 0, 0);
    let mut phis = Vec::new();

    let mut start = 0;
    'outer: while start < spec.max_rejection_tries && (pos < spec.count_pos || neg < spec.count_neg)
    {
        let end = (start + BATCH).min(spec.max_rejection_tries);
        let batch = (start..end)
            .into_par_iter()
            .map(|t| candidate(spec, t))
            .collect::<Result<Vec<_>>>()?;
        for (inst, phi) in batch {
            tries += 1;
            phis.push(phi);
            let wanted = match promise_label(phi) {
                None => {
                    in_gap += 1;
                    continue;
                }
                Some(Label::Positive) => pos < spec.count_pos,
                Some(Label::Negative) => neg < spec.count_neg,
            };
            if !wanted {
                surplus += 1;
                continue;
            }
            let label = promise_label(phi).expect("checked above");
            match label {
                Label::Positive => pos += 1,
                Label::Negative => neg += 1,
            }
            samples.push(LabeledSample {
                sample: inst.encode(),
                label,
                phi,
                provenance: Provenance::RejectionSampled,
            });
            if pos == spec.count_pos && neg == spec.count_neg {
                break 'outer;
            }
        }
        start = end;
    }

    let constructive_pos = spec.count_pos - pos;
    let constructive_neg = spec.count_neg - neg;
    samples.extend(constructive_positives(spec.n, spec.k, constructive_pos)?);
    samples.extend(constructive_negatives(spec.n, spec.k, constructive_neg)?);

    let rate = |a: usize| {
        if tries == 0 {
            0.0
        } else {
            a as f64 / tries as f64
        }
    };
    let report = GenerationReport {
        tries,
        accepted_pos: pos,
        accepted_neg: neg,
        in_gap,
        surplus,
        acceptance_rate_pos: rate(pos),
        acceptance_rate_neg: rate(neg),
        constructive_pos,
        constructive_neg,
        sampling: "uniform over constant and 1-, 2-, 3-bit products per function".into(),
        phi: PhiHistogram::summarize(&phis),
    };
    Ok((samples, report))
}

/// The first `count` positives over distinct triples in lexicographic order.
pub fn constructive_positives(n: usize, k: usize, count: usize) -> Result<Vec<LabeledSample>> {
    let available = triples(n).count();
    if count > available {
        return Err(DatagenError::InsufficientConstructive {
            label: Label::Positive,
            needed: count,
            available,
            n,
        });
    }
    triples(n)
        .take(count)
        .map(|[i, j, l]| make_positive_sample(n, k, (i, j, l)))
        .collect()
}

/// The first `count` negatives over (j, triple) pairs, j-major.
pub fn constructive_negatives(n: usize, k: usize, count: usize) -> Result<Vec<LabeledSample>> {
    let available = n * triples(n).count();
    if count > available {
        return Err(DatagenError::InsufficientConstructive {
            label: Label::Negative,
            needed: count,
            available,
            n,
        });
    }
    (1..=n)
        .flat_map(|j| triples(n).map(move |t| (j, t)))
        .take(count)
        .map(|(j, t)| make_negative_sample(n, k, j, t))
        .collect()
}
