//! Dense statevector engine for the gate families used by k-Forrelation circuits.
//!
//! Qubit `j` (1-based) maps to bit `j - 1` of the basis-state index, so qubit 1
//! is the least significant bit. Bitstrings print most significant qubit first:
//! `"001"` is the 3-qubit basis state with only qubit 1 set.
//!
//! Only four gate kinds exist: a Hadamard layer on every qubit, a phase flip
//! conditioned on up to three qubits, the controlled phase `diag(1, .., e^{iλ})`
//! on the all-ones subspace of its qubits, and SWAP. HadamardAll and the diagonal
//! gates update amplitudes in place.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Largest register the simulator will allocate (2^24 amplitudes, 256 MiB).
pub const MAX_QUBITS: usize = 24;

/// Largest register for which [`unitary_of`] builds a dense matrix.
pub const MAX_UNITARY_QUBITS: usize = 6;

/// Norm drift allowed after any sequence of gates.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Registers at least this large are processed with rayon.
const PARALLEL_THRESHOLD: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QStateError {
    #[error("{requested} qubits requested, supported range is 1..={max}")]
    Capacity { requested: usize, max: usize },
    #[error("qubit {index} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("qubit {0} listed more than once")]
    DuplicateQubit(usize),
    #[error("{gate} acts on {got} qubits, expected {expected}")]
    Arity {
        gate: &'static str,
        expected: &'static str,
        got: usize,
    },
    #[error("bitstring has {got} bits but the state has {expected} qubits")]
    LengthMismatch { expected: usize, got: usize },
    #[error("basis index {index} out of range for dimension {dim}")]
    BasisOutOfRange { index: usize, dim: usize },
    #[error("invalid bitstring {0:?}")]
    InvalidBitString(String),
    #[error("amplitude vector of length {0} is not a power of two")]
    BadDimension(usize),
    #[error("state norm {0} deviates from 1")]
    NotNormalized(f64),
    #[error("shot count must be at least 1")]
    ZeroShots,
}

pub type Result<T> = std::result::Result<T, QStateError>;

/// A set of 1-based qubit indices, stored as a bit mask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitSet(u64);

impl QubitSet {
    pub const EMPTY: QubitSet = QubitSet(0);

    pub fn new(qubits: &[usize]) -> Result<Self> {
        let mut mask = 0u64;
        for &q in qubits {
            if q == 0 || q > 64 {
                return Err(QStateError::QubitOutOfRange {
                    index: q,
                    n_qubits: 64,
                });
            }
            let bit = 1u64 << (q - 1);
            if mask & bit != 0 {
                return Err(QStateError::DuplicateQubit(q));
            }
            mask |= bit;
        }
        Ok(QubitSet(mask))
    }

    /// Bit `j - 1` of `mask` set means qubit `j` is in the set.
    pub const fn from_mask(mask: u64) -> Self {
        QubitSet(mask)
    }

    pub const fn mask(self) -> u64 {
        self.0
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, qubit: usize) -> bool {
        (1..=64).contains(&qubit) && self.0 & (1u64 << (qubit - 1)) != 0
    }

    /// Highest qubit index in the set.
    pub fn max_qubit(self) -> Option<usize> {
        (self.0 != 0).then(|| 64 - self.0.leading_zeros() as usize)
    }

    /// Qubit indices in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..64usize)
            .filter(move |b| self.0 >> b & 1 == 1)
            .map(|b| b + 1)
    }

    fn check_range(self, n_qubits: usize) -> Result<()> {
        match self.max_qubit() {
            Some(q) if q > n_qubits => Err(QStateError::QubitOutOfRange { index: q, n_qubits }),
            _ => Ok(()),
        }
    }
}

impl fmt::Debug for QubitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for QubitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, q) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{q}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    /// H on every qubit.
    HadamardAll,
    /// Multiplies |z⟩ by -1 when every qubit in the set is 1. Empty set is the identity.
    PhaseFlip(QubitSet),
    /// Multiplies |z⟩ by e^{i·angle} when every qubit in the set is 1.
    ControlledPhase {
        qubits: QubitSet,
        angle: f64,
    },
    Swap(usize, usize),
}

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::HadamardAll => "HadamardAll",
            Gate::PhaseFlip(_) => "PhaseFlip",
            Gate::ControlledPhase { .. } => "ControlledPhase",
            Gate::Swap(..) => "Swap",
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        match *self {
            Gate::HadamardAll => Ok(()),
            Gate::PhaseFlip(qubits) => {
                if qubits.len() > 3 {
                    return Err(QStateError::Arity {
                        gate: self.name(),
                        expected: "0 to 3",
                        got: qubits.len(),
                    });
                }
                qubits.check_range(n_qubits)
            }
            Gate::ControlledPhase { qubits, .. } => {
                if qubits.is_empty() || qubits.len() > 3 {
                    return Err(QStateError::Arity {
                        gate: self.name(),
                        expected: "1 to 3",
                        got: qubits.len(),
                    });
                }
                qubits.check_range(n_qubits)
            }
            Gate::Swap(a, b) => {
                for q in [a, b] {
                    if q == 0 || q > n_qubits {
                        return Err(QStateError::QubitOutOfRange { index: q, n_qubits });
                    }
                }
                if a == b {
                    return Err(QStateError::DuplicateQubit(a));
                }
                Ok(())
            }
        }
    }

    pub fn is_parameterized(&self) -> bool {
        matches!(self, Gate::ControlledPhase { .. })
    }

    pub fn adjoint(&self) -> Gate {
        match *self {
            Gate::ControlledPhase { qubits, angle } => Gate::ControlledPhase {
                qubits,
                angle: -angle,
            },
            ref g => g.clone(),
        }
    }
}

/// Adjoint of a gate sequence: reversed order, each gate inverted.
pub fn adjoint_sequence(gates: &[Gate]) -> Vec<Gate> {
    gates.iter().rev().map(Gate::adjoint).collect()
}

/// A computational basis label of fixed width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BitString {
    len: usize,
    index: usize,
}

impl BitString {
    pub fn from_index(index: usize, len: usize) -> Result<Self> {
        if len == 0 || len >= usize::BITS as usize {
            return Err(QStateError::Capacity {
                requested: len,
                max: usize::BITS as usize - 1,
            });
        }
        if index >> len != 0 {
            return Err(QStateError::BasisOutOfRange {
                index,
                dim: 1 << len,
            });
        }
        Ok(BitString { len, index })
    }

    pub fn zeros(len: usize) -> Self {
        BitString { len, index: 0 }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Value of qubit `q` (1-based).
    pub fn bit(&self, q: usize) -> bool {
        q >= 1 && q <= self.len && self.index >> (q - 1) & 1 == 1
    }
}

impl FromStr for BitString {
    type Err = QStateError;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() || s.len() >= usize::BITS as usize {
            return Err(QStateError::InvalidBitString(s.to_string()));
        }
        let mut index = 0usize;
        for c in s.chars() {
            index = index << 1
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(QStateError::InvalidBitString(s.to_string())),
                };
        }
        Ok(BitString {
            len: s.len(),
            index,
        })
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0width$b}", self.index, width = self.len)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// |0…0⟩ on `n_qubits` qubits.
    pub fn init_zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_capacity(n_qubits, MAX_QUBITS)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(QStateError::BasisOutOfRange { index, dim });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps an existing amplitude vector; the norm must be 1 within 1e-10.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(QStateError::BadDimension(dim));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_capacity(n_qubits, MAX_QUBITS)?;
        let norm: f64 = amplitudes.iter().map(Complex64::norm_sqr).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(QStateError::NotNormalized(norm));
        }
        Ok(StateVector {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn amplitude(&self, z: &BitString) -> Result<Complex64> {
        if z.len() != self.n_qubits {
            return Err(QStateError::LengthMismatch {
                expected: self.n_qubits,
                got: z.len(),
            });
        }
        Ok(self.amplitudes[z.index()])
    }

    pub fn amplitude_at(&self, index: usize) -> Result<Complex64> {
        self.amplitudes
            .get(index)
            .copied()
            .ok_or(QStateError::BasisOutOfRange {
                index,
                dim: self.dim(),
            })
    }

    /// Born-rule probability of basis state `index`. Out-of-range indices have probability 0.
    pub fn probability(&self, index: usize) -> f64 {
        self.amplitudes.get(index).map_or(0.0, Complex64::norm_sqr)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(Complex64::norm_sqr).collect()
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match *gate {
            Gate::HadamardAll => hadamard_all(&mut self.amplitudes),
            Gate::PhaseFlip(qubits) => flip_sign(&mut self.amplitudes, qubits.mask() as usize),
            Gate::ControlledPhase { qubits, angle } => {
                let mask = qubits.mask() as usize;
                match PhaseFactor::of(angle) {
                    PhaseFactor::Identity => {}
                    PhaseFactor::Negate => flip_sign(&mut self.amplitudes, mask),
                    PhaseFactor::General(phase) => apply_phase(&mut self.amplitudes, mask, phase),
                }
            }
            Gate::Swap(a, b) => swap_qubits(&mut self.amplitudes, a - 1, b - 1),
        }
        Ok(())
    }

    /// Applies every gate in order. The whole sequence is validated first, so
    /// an invalid gate leaves the state untouched.
    pub fn apply_all(&mut self, gates: &[Gate]) -> Result<()> {
        for g in gates {
            g.validate(self.n_qubits)?;
        }
        for g in gates {
            self.apply(g)?;
        }
        Ok(())
    }

    /// `shots` i.i.d. computational-basis measurements, reproducible from `seed`.
    pub fn sample_measurements(&self, shots: usize, seed: u64) -> Result<Measurements> {
        if shots == 0 {
            return Err(QStateError::ZeroShots);
        }
        let weights = self.probabilities();
        let dist = WeightedIndex::new(&weights)
            .map_err(|_| QStateError::NotNormalized(self.norm_sqr()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let outcomes = (0..shots).map(|_| dist.sample(&mut rng)).collect();
        Ok(Measurements {
            n_qubits: self.n_qubits,
            outcomes,
        })
    }
}

/// Outcomes of repeated measurement, as basis indices in draw order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Measurements {
    n_qubits: usize,
    outcomes: Vec<usize>,
}

impl Measurements {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn shots(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }

    pub fn count(&self, index: usize) -> usize {
        self.outcomes.iter().filter(|&&o| o == index).count()
    }

    pub fn frequency(&self, index: usize) -> f64 {
        self.count(index) as f64 / self.shots() as f64
    }

    pub fn histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for &o in &self.outcomes {
            *h.entry(o).or_insert(0) += 1;
        }
        h
    }
}

/// Runs `gates` on |0…0⟩.
pub fn simulate(n_qubits: usize, gates: &[Gate]) -> Result<StateVector> {
    let mut state = StateVector::init_zero(n_qubits)?;
    state.apply_all(gates)?;
    Ok(state)
}

/// Dense matrix of the gate product, columns indexed like [`StateVector`] amplitudes.
/// The first gate in `gates` acts first.
pub fn unitary_of(gates: &[Gate], n_qubits: usize) -> Result<DMatrix<Complex64>> {
    check_capacity(n_qubits, MAX_UNITARY_QUBITS)?;
    for g in gates {
        g.validate(n_qubits)?;
    }
    let dim = 1usize << n_qubits;
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut s = StateVector::basis(n_qubits, col)?;
        s.apply_all(gates)?;
        for (row, a) in s.amplitudes.iter().enumerate() {
            m[(row, col)] = *a;
        }
    }
    Ok(m)
}

/// Max elementwise deviation between `a` and `b` after removing the best global phase
/// (anchored at the largest entry of `a`). `None` when shapes differ or `a` is zero.
pub fn global_phase_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Option<f64> {
    if a.shape() != b.shape() {
        return None;
    }
    let (pos, anchor) = a
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))?;
    if anchor.norm() == 0.0 {
        return None;
    }
    let ratio = b.as_slice()[pos] / anchor;
    let phase = if ratio.norm() > 0.0 {
        ratio / ratio.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    Some(
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x * phase - y).norm())
            .fold(0.0, f64::max),
    )
}

pub fn equal_up_to_global_phase(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>, tol: f64) -> bool {
    global_phase_distance(a, b).is_some_and(|d| d <= tol)
}

fn check_capacity(n_qubits: usize, max: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > max {
        return Err(QStateError::Capacity {
            requested: n_qubits,
            max,
        });
    }
    Ok(())
}

enum PhaseFactor {
    Identity,
    Negate,
    General(Complex64),
}

impl PhaseFactor {
    // λ = 0 and λ = π are snapped so the controlled phase matches Z/CZ/CCZ bit for bit.
    fn of(angle: f64) -> Self {
        let r = angle.rem_euclid(TAU);
        if r == 0.0 {
            PhaseFactor::Identity
        } else if r == PI {
            PhaseFactor::Negate
        } else {
            PhaseFactor::General(Complex64::from_polar(1.0, angle))
        }
    }
}

fn hadamard_all(amps: &mut [Complex64]) {
    let dim = amps.len();
    let butterfly = |half: usize| {
        move |block: &mut [Complex64]| {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = (x + y) * FRAC_1_SQRT_2;
                *b = (x - y) * FRAC_1_SQRT_2;
            }
        }
    };
    let mut half = 1;
    while half < dim {
        let step = half << 1;
        if dim < PARALLEL_THRESHOLD {
            amps.chunks_mut(step).for_each(butterfly(half));
        } else if dim / step >= 64 {
            amps.par_chunks_mut(step).for_each(butterfly(half));
        } else {
            // few large blocks: split each block's halves across threads instead
            for block in amps.chunks_mut(step) {
                let (lo, hi) = block.split_at_mut(half);
                lo.par_iter_mut().zip(hi.par_iter_mut()).for_each(|(a, b)| {
                    let (x, y) = (*a, *b);
                    *a = (x + y) * FRAC_1_SQRT_2;
                    *b = (x - y) * FRAC_1_SQRT_2;
                });
            }
        }
        half = step;
    }
}

fn flip_sign(amps: &mut [Complex64], mask: usize) {
    if mask == 0 {
        return;
    }
    let f = |(z, a): (usize, &mut Complex64)| {
        if z & mask == mask {
            *a = -*a;
        }
    };
    if amps.len() >= PARALLEL_THRESHOLD {
        amps.par_iter_mut().enumerate().for_each(f);
    } else {
        amps.iter_mut().enumerate().for_each(f);
    }
}

fn apply_phase(amps: &mut [Complex64], mask: usize, phase: Complex64) {
    let f = |(z, a): (usize, &mut Complex64)| {
        if z & mask == mask {
            *a *= phase;
        }
    };
    if amps.len() >= PARALLEL_THRESHOLD {
        amps.par_iter_mut().enumerate().for_each(f);
    } else {
        amps.iter_mut().enumerate().for_each(f);
    }
}

fn swap_qubits(amps: &mut [Complex64], a: usize, b: usize) {
    let (ba, bb) = (1usize << a, 1usize << b);
    for z in 0..amps.len() {
        if z & ba != 0 && z & bb == 0 {
            amps.swap(z, z ^ ba ^ bb);
        }
    }
}
