//! VQC and two-sample QSVM decision procedures over the k-Forrelation feature map.
//!
//! The feature map is `U_F(x)|0^n⟩` with `U_F` from [`build_circuit`]. The VQC
//! uses the identity variational layer and the observable |0^n⟩⟨0^n|, so
//! `p_{+1}(x) = Φ²`. The QSVM is trained on one positive and one negative
//! sample; with `α₁ = α₂ = α` and `k(x,x) = 1` its dual collapses to
//! maximising `2α − α²(1 − k₁₂)` on `[0, C]`.
//!
//! Bias intervals: a promise-positive sample has `p_{+1} ≥ 9/25` and a negative
//! one `p_{+1} ≤ 1/10000`, so a VQC bias separates them exactly when it lies in
//! [`VQC_BIAS_INTERVAL`] `= (7/25, 4999/5000)`. For the QSVM the admissible bias
//! is `(7α/25, 4999α/5000)`.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forrelation::{build_circuit, EncodedSample, ForrelationError};
use crate::qstate::{self, adjoint_sequence, QStateError, StateVector};

/// Bias interval for the VQC decision rule.
pub const VQC_BIAS_INTERVAL: (f64, f64) = (7.0 / 25.0, 4999.0 / 5000.0);

/// QSVM bias interval per unit of α.
pub const QSVM_BIAS_FACTORS: (f64, f64) = (7.0 / 25.0, 4999.0 / 5000.0);

/// Box constraint used when none is given; large enough that α is never clipped
/// for kernel values below 1 − 1e-6.
pub const DEFAULT_BOX_C: f64 = 1e6;

/// `k₁₂` at or above `1 − DEGENERACY_TOLERANCE` makes the training pair unusable.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

/// Probability above which a feature state is treated as a basis state.
const BASIS_STATE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Forrelation(#[from] ForrelationError),
    #[error(transparent)]
    Simulator(#[from] QStateError),
    #[error("samples have shapes (n={0}, k={1}) and (n={2}, k={3})")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("training samples are indistinguishable under the feature map (k12 = {0})")]
    DegenerateTrainingSet(f64),
    #[error("box constraint must be positive, got {0}")]
    InvalidBoxConstraint(f64),
    #[error("bias {0} outside [-1, 1]")]
    BiasOutOfRange(f64),
    #[error("need 0 < epsilon < 1 and 0 < delta < 1, got epsilon = {epsilon}, delta = {delta}")]
    InvalidShotParameters { epsilon: f64, delta: f64 },
}

pub type Result<T> = std::result::Result<T, ClassifyError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn as_i8(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    pub fn from_i64(v: i64) -> Option<Self> {
        match v {
            1 => Some(Label::Positive),
            -1 => Some(Label::Negative),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Positive => "+1",
            Label::Negative => "-1",
        })
    }
}

/// Exact amplitudes, or frequencies from `shots` simulated measurements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Sampled { shots: usize, seed: u64 },
}

impl Mode {
    fn probability_of(self, state: &StateVector, index: usize) -> Result<f64> {
        match self {
            Mode::Exact => Ok(state.probability(index)),
            Mode::Sampled { shots, seed } => {
                Ok(state.sample_measurements(shots, seed)?.frequency(index))
            }
        }
    }

    fn reseeded(self, offset: u64) -> Self {
        match self {
            Mode::Sampled { shots, seed } => Mode::Sampled {
                shots,
                seed: seed.wrapping_add(offset),
            },
            m => m,
        }
    }
}

fn feature_state(x: &EncodedSample) -> Result<StateVector> {
    Ok(qstate::simulate(x.n(), &build_circuit(&x.decode()))?)
}

fn check_shapes(a: &EncodedSample, b: &EncodedSample) -> Result<()> {
    if a.n() != b.n() || a.k() != b.k() {
        return Err(ClassifyError::DimensionMismatch(a.n(), a.k(), b.n(), b.k()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VqcModel {
    bias: f64,
    mode: Mode,
}

impl VqcModel {
    pub fn new(bias: f64, mode: Mode) -> Result<Self> {
        if !(-1.0..=1.0).contains(&bias) {
            return Err(ClassifyError::BiasOutOfRange(bias));
        }
        Ok(VqcModel { bias, mode })
    }

    /// Bias at the midpoint of [`VQC_BIAS_INTERVAL`].
    pub fn default_for_forrelation(mode: Mode) -> Self {
        let (lo, hi) = VQC_BIAS_INTERVAL;
        VqcModel {
            bias: 0.5 * (lo + hi),
            mode,
        }
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn classify(&self, sample: &EncodedSample) -> Result<Label> {
        vqc_classify(sample, self)
    }
}

/// p_{+1}(x) = |⟨0^n|U_F(x)|0^n⟩|².
pub fn vqc_probability(sample: &EncodedSample, mode: Mode) -> Result<f64> {
    mode.probability_of(&feature_state(sample)?, 0)
}

/// +1 iff p > (1 − bias)/2; equality goes to −1.
pub fn vqc_decide(probability: f64, bias: f64) -> Label {
    if probability > 0.5 * (1.0 - bias) {
        Label::Positive
    } else {
        Label::Negative
    }
}

pub fn vqc_classify(sample: &EncodedSample, model: &VqcModel) -> Result<Label> {
    Ok(vqc_decide(vqc_probability(sample, model.mode)?, model.bias))
}

/// A squared fidelity, in [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct KernelValue(f64);

impl KernelValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// k(xi, xj) = |⟨0|U†(xi) U(xj)|0⟩|², read as the probability of 0^n after
/// running U(xj) and then the reversed, inverted circuit of xi.
pub fn kernel(xi: &EncodedSample, xj: &EncodedSample, mode: Mode) -> Result<KernelValue> {
    check_shapes(xi, xj)?;
    let mut gates = build_circuit(&xj.decode());
    gates.extend(adjoint_sequence(&build_circuit(&xi.decode())));
    let state = qstate::simulate(xi.n(), &gates)?;
    let p = mode.probability_of(&state, 0)?;
    Ok(KernelValue(p.min(1.0)))
}

/// Exact kernel matrix over `samples`.
pub fn gram_matrix(samples: &[EncodedSample]) -> Result<DMatrix<f64>> {
    let m = samples.len();
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        g[(i, i)] = kernel(&samples[i], &samples[i], Mode::Exact)?.value();
        for j in i + 1..m {
            let v = kernel(&samples[i], &samples[j], Mode::Exact)?.value();
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// The two-sample dual objective 2α − α²(1 − k₁₂).
pub fn dual_objective(alpha: f64, k12: f64) -> f64 {
    2.0 * alpha - alpha * alpha * (1.0 - k12)
}

/// Maximiser of [`dual_objective`] on [0, box_c].
pub fn solve_two_sample_dual(k12: f64, box_c: f64) -> Result<f64> {
    if box_c.is_nan() || box_c <= 0.0 {
        return Err(ClassifyError::InvalidBoxConstraint(box_c));
    }
    if k12 >= 1.0 - DEGENERACY_TOLERANCE {
        return Err(ClassifyError::DegenerateTrainingSet(k12));
    }
    Ok((1.0 / (1.0 - k12)).min(box_c))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution {
    pub alpha: f64,
    pub bias: f64,
    pub box_c: f64,
    /// k(x⁺, x⁻) used to solve the dual.
    pub k12: f64,
    pub x_plus: EncodedSample,
    pub x_minus: EncodedSample,
    /// Basis state z with U_F(x⁻)|0⟩ = |z⟩, when x⁺ maps |0⟩ to itself.
    readout: Option<usize>,
}

impl DualSolution {
    /// (7α/25, 4999α/5000).
    pub fn bias_interval(&self) -> (f64, f64) {
        (
            QSVM_BIAS_FACTORS.0 * self.alpha,
            QSVM_BIAS_FACTORS.1 * self.alpha,
        )
    }

    pub fn with_bias(mut self, bias: f64) -> Self {
        self.bias = bias;
        self
    }

    /// The basis state the negative training sample is mapped to, if the pair is constructive.
    pub fn readout_state(&self) -> Option<usize> {
        self.readout
    }
}

/// Trains on one positive and one negative sample. Bias defaults to the
/// midpoint of `(7α/25, 4999α/5000)`.
pub fn qsvm_train(
    x_plus: &EncodedSample,
    x_minus: &EncodedSample,
    box_c: f64,
) -> Result<DualSolution> {
    check_shapes(x_plus, x_minus)?;
    let k12 = kernel(x_plus, x_minus, Mode::Exact)?.value();
    let alpha = solve_two_sample_dual(k12, box_c)?;
    let plus_state = feature_state(x_plus)?;
    let minus_state = feature_state(x_minus)?;
    let readout = if plus_state.probability(0) >= 1.0 - BASIS_STATE_TOLERANCE {
        (1..minus_state.dim()).find(|&z| minus_state.probability(z) >= 1.0 - BASIS_STATE_TOLERANCE)
    } else {
        None
    };
    let (lo, hi) = (QSVM_BIAS_FACTORS.0 * alpha, QSVM_BIAS_FACTORS.1 * alpha);
    Ok(DualSolution {
        alpha,
        bias: 0.5 * (lo + hi),
        box_c,
        k12,
        x_plus: x_plus.clone(),
        x_minus: x_minus.clone(),
        readout,
    })
}

/// α(k(x⁺,s) − k(x⁻,s)) + b.
///
/// For a constructive pair the two kernels are the probabilities of 0^n and z
/// in U_F(s)|0^n⟩; in sampled mode both come from one measurement batch.
pub fn qsvm_decision_value(s: &EncodedSample, sol: &DualSolution, mode: Mode) -> Result<f64> {
    check_shapes(s, &sol.x_plus)?;
    let (k_plus, k_minus) = match sol.readout {
        Some(z) => {
            let state = feature_state(s)?;
            match mode {
                Mode::Exact => (state.probability(0), state.probability(z)),
                Mode::Sampled { shots, seed } => {
                    let m = state.sample_measurements(shots, seed)?;
                    (m.frequency(0), m.frequency(z))
                }
            }
        }
        None => (
            kernel(&sol.x_plus, s, mode)?.value(),
            kernel(&sol.x_minus, s, mode.reseeded(1))?.value(),
        ),
    };
    Ok(sol.alpha * (k_plus - k_minus) + sol.bias)
}

/// Sign of the decision value, with sign(0) = −1.
pub fn qsvm_classify(s: &EncodedSample, sol: &DualSolution, mode: Mode) -> Result<Label> {
    let v = qsvm_decision_value(s, sol, mode)?;
    Ok(if v > 0.0 {
        Label::Positive
    } else {
        Label::Negative
    })
}

/// Shots for which Hoeffding gives |p̂ − p| ≤ ε with probability ≥ 1 − δ:
/// ⌈ln(2/δ) / (2ε²)⌉.
pub fn shot_budget_for(epsilon: f64, delta: f64) -> Result<usize> {
    let open_unit = |v: f64| v > 0.0 && v < 1.0;
    if !open_unit(epsilon) || !open_unit(delta) {
        return Err(ClassifyError::InvalidShotParameters { epsilon, delta });
    }
    let shots = ((2.0 / delta).ln() / (2.0 * epsilon * epsilon)).ceil();
    Ok((shots as usize).max(1))
}
