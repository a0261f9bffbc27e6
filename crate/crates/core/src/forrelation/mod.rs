//! k-Forrelation instances, their multi-hot encoding, and Φ.
//!
//! Every function in an instance is either constant (+1) or `(-1)^{∏_{j∈J} x_j}`
//! for a set `J` of at most three input bits. Φ is computed three independent
//! ways: the exponential brute-force sum, the direct Hadamard/phase-flip circuit
//! and the fixed controlled-phase ansatz.

mod ansatz;
mod oddk;

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qstate::{self, Gate, QStateError, QubitSet, StateVector};

pub use ansatz::{
    ansatz_angle, ansatz_slots, build_fixed_ansatz, fixed_ansatz_state, parameterized_gate_count,
    phi_fixed_ansatz, slots_per_function,
};
pub use oddk::{gadget_pairs, gadget_sequence, oddk_extend, OddKExtension};

/// Most input bits a single function may depend on.
pub const MAX_FUNCTION_BITS: usize = 3;

/// Largest `k·n` the brute-force oracle accepts (2^24 terms).
pub const BRUTE_FORCE_MAX_BITS: usize = 24;

/// Largest tolerated imaginary part of ⟨0|U_F|0⟩.
pub const IMAGINARY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForrelationError {
    #[error("an instance needs at least one function")]
    NoFunctions,
    #[error("an instance needs at least one input bit")]
    NoInputBits,
    #[error("function depends on {0} bits, at most 3 are allowed")]
    TooManyBits(usize),
    #[error("function {function} uses bit {bit} but n = {n}")]
    BitOutOfRange {
        function: usize,
        bit: usize,
        n: usize,
    },
    #[error("encoded sample has {got} bits, expected k·n = {expected}")]
    SampleLength { expected: usize, got: usize },
    #[error("encoded sample contains non-binary value {0}")]
    NonBinary(u8),
    #[error("block {block} has {ones} ones, at most 3 are allowed")]
    MalformedBlock { block: usize, ones: usize },
    #[error("brute force needs k·n <= {max}, got {kn}")]
    BruteForceCapacity { kn: usize, max: usize },
    #[error("amplitude ⟨0|U_F|0⟩ has imaginary part {0:e}")]
    NonRealAmplitude(f64),
    #[error("|Φ| = {0} exceeds 1")]
    PhiOutOfRange(f64),
    #[error("odd-k extension needs n >= 2, got {0}")]
    TooFewBitsForGadget(usize),
    #[error(transparent)]
    Simulator(#[from] QStateError),
}

pub type Result<T> = std::result::Result<T, ForrelationError>;

/// One restricted Boolean function: constant when `bits` is empty.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BooleanFunction {
    bits: QubitSet,
}

impl BooleanFunction {
    pub const CONSTANT: BooleanFunction = BooleanFunction {
        bits: QubitSet::EMPTY,
    };

    /// `(-1)^{∏ x_j}` over the given 1-based bit indices; empty slice gives the constant.
    pub fn new(bits: &[usize]) -> Result<Self> {
        Self::from_set(QubitSet::new(bits)?)
    }

    pub fn from_set(bits: QubitSet) -> Result<Self> {
        if bits.len() > MAX_FUNCTION_BITS {
            return Err(ForrelationError::TooManyBits(bits.len()));
        }
        Ok(BooleanFunction { bits })
    }

    pub fn bits(self) -> QubitSet {
        self.bits
    }

    pub fn arity(self) -> usize {
        self.bits.len()
    }

    pub fn is_constant(self) -> bool {
        self.bits.is_empty()
    }

    /// f(x) for an input packed as an integer (bit j-1 holds x_j).
    pub fn eval(self, x: u64) -> i8 {
        let m = self.bits.mask();
        if m != 0 && x & m == m {
            -1
        } else {
            1
        }
    }

    /// The diagonal gate U_f.
    pub fn gate(self) -> Gate {
        Gate::PhaseFlip(self.bits)
    }
}

impl fmt::Debug for BooleanFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.bits)
    }
}

/// An ordered tuple of k restricted functions over n input bits.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ForrelationInstance {
    n: usize,
    functions: Vec<BooleanFunction>,
}

impl ForrelationInstance {
    pub fn new(n: usize, functions: Vec<BooleanFunction>) -> Result<Self> {
        if n == 0 {
            return Err(ForrelationError::NoInputBits);
        }
        if functions.is_empty() {
            return Err(ForrelationError::NoFunctions);
        }
        for (i, f) in functions.iter().enumerate() {
            if let Some(bit) = f.bits.max_qubit().filter(|&b| b > n) {
                return Err(ForrelationError::BitOutOfRange {
                    function: i + 1,
                    bit,
                    n,
                });
            }
        }
        Ok(ForrelationInstance { n, functions })
    }

    /// Shorthand for tests and examples: one bit-index list per function.
    pub fn from_bit_lists(n: usize, lists: &[&[usize]]) -> Result<Self> {
        let functions = lists
            .iter()
            .map(|l| BooleanFunction::new(l))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, functions)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.functions.len()
    }

    pub fn functions(&self) -> &[BooleanFunction] {
        &self.functions
    }

    /// At least one function depends on exactly three bits.
    pub fn is_promise_complete(&self) -> bool {
        self.functions.iter().any(|f| f.arity() == 3)
    }

    /// Multi-hot encoding: block i is the indicator vector of function i's bits.
    pub fn encode(&self) -> EncodedSample {
        let mut bits = vec![0u8; self.k() * self.n];
        for (i, f) in self.functions.iter().enumerate() {
            for j in f.bits.iter() {
                bits[i * self.n + j - 1] = 1;
            }
        }
        EncodedSample {
            n: self.n,
            k: self.k(),
            bits,
        }
    }
}

/// The kn-bit multi-hot vector of an instance, block-major (function 1 first).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSample", into = "RawSample")]
pub struct EncodedSample {
    n: usize,
    k: usize,
    bits: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
struct RawSample {
    n: usize,
    k: usize,
    bits: String,
}

impl TryFrom<RawSample> for EncodedSample {
    type Error = ForrelationError;

    fn try_from(raw: RawSample) -> Result<Self> {
        EncodedSample::parse(raw.n, raw.k, &raw.bits)
    }
}

impl From<EncodedSample> for RawSample {
    fn from(s: EncodedSample) -> Self {
        RawSample {
            n: s.n,
            k: s.k,
            bits: s.bit_string(),
        }
    }
}

impl EncodedSample {
    pub fn new(n: usize, k: usize, bits: Vec<u8>) -> Result<Self> {
        if n == 0 {
            return Err(ForrelationError::NoInputBits);
        }
        if k == 0 {
            return Err(ForrelationError::NoFunctions);
        }
        if bits.len() != n * k {
            return Err(ForrelationError::SampleLength {
                expected: n * k,
                got: bits.len(),
            });
        }
        if let Some(&v) = bits.iter().find(|&&b| b > 1) {
            return Err(ForrelationError::NonBinary(v));
        }
        for (block, chunk) in bits.chunks(n).enumerate() {
            let ones = chunk.iter().filter(|&&b| b == 1).count();
            if ones > MAX_FUNCTION_BITS {
                return Err(ForrelationError::MalformedBlock {
                    block: block + 1,
                    ones,
                });
            }
        }
        Ok(EncodedSample { n, k, bits })
    }

    /// Parses a `0`/`1` string of length k·n.
    pub fn parse(n: usize, k: usize, s: &str) -> Result<Self> {
        let bits = s
            .bytes()
            .map(|b| match b {
                b'0' => Ok(0),
                b'1' => Ok(1),
                other => Err(ForrelationError::NonBinary(other)),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(n, k, bits)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// The n bits encoding function `i` (0-based).
    pub fn block(&self, i: usize) -> &[u8] {
        &self.bits[i * self.n..(i + 1) * self.n]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[u8]> {
        self.bits.chunks(self.n)
    }

    pub fn bit_string(&self) -> String {
        self.bits
            .iter()
            .map(|&b| if b == 1 { '1' } else { '0' })
            .collect()
    }

    pub fn decode(&self) -> ForrelationInstance {
        let functions = self
            .blocks()
            .map(|block| {
                let mask = block
                    .iter()
                    .enumerate()
                    .filter(|(_, &b)| b == 1)
                    .fold(0u64, |m, (j, _)| m | 1 << j);
                BooleanFunction {
                    bits: QubitSet::from_mask(mask),
                }
            })
            .collect();
        ForrelationInstance {
            n: self.n,
            functions,
        }
    }
}

/// A forrelation value; |Φ| ≤ 1 is checked on construction.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Phi(f64);

impl Phi {
    pub const TOLERANCE: f64 = 1e-12;

    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value.abs() > 1.0 + Self::TOLERANCE {
            return Err(ForrelationError::PhiOutOfRange(value));
        }
        Ok(Phi(value))
    }

    /// Φ read from the real amplitude ⟨0|U_F|0⟩.
    pub fn from_amplitude(amplitude: Complex64) -> Result<Self> {
        if amplitude.im.abs() > IMAGINARY_TOLERANCE {
            return Err(ForrelationError::NonRealAmplitude(amplitude.im));
        }
        Self::new(amplitude.re)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Probability of measuring 0^n, Φ².
    pub fn probability(self) -> f64 {
        self.0 * self.0
    }
}

/// Exact Φ from its defining 2^{kn}-term sum.
///
/// Terms are ±1, so the sum is accumulated as an integer and scaled once by
/// 2^{-(k+1)n/2}; the result does not depend on how rayon splits the range.
pub fn phi_bruteforce(inst: &ForrelationInstance) -> Result<Phi> {
    let (n, k) = (inst.n(), inst.k());
    let kn = n * k;
    if kn > BRUTE_FORCE_MAX_BITS {
        return Err(ForrelationError::BruteForceCapacity {
            kn,
            max: BRUTE_FORCE_MAX_BITS,
        });
    }
    let masks: Vec<u64> = inst.functions.iter().map(|f| f.bits.mask()).collect();
    let input_mask = (1u64 << n) - 1;
    let term = |t: usize| -> i64 {
        let t = t as u64;
        let mut parity = 0u32;
        let mut prev: Option<u64> = None;
        for (i, &m) in masks.iter().enumerate() {
            let x = (t >> (i * n)) & input_mask;
            if m != 0 && x & m == m {
                parity ^= 1;
            }
            if let Some(p) = prev {
                parity ^= (p & x).count_ones() & 1;
            }
            prev = Some(x);
        }
        if parity == 0 {
            1
        } else {
            -1
        }
    };
    let sum: i64 = (0..1usize << kn)
        .into_par_iter()
        .with_min_len(1 << 12)
        .map(term)
        .sum();
    let exponent = (k + 1) * n;
    let mut scale = 0.5f64.powi((exponent / 2) as i32);
    if exponent % 2 == 1 {
        scale *= FRAC_1_SQRT_2;
    }
    Phi::new(sum as f64 * scale)
}

/// `H U_{f_k} H … H U_{f_1} H` as a gate list of length 2k+1. Constant functions
/// contribute an explicit `PhaseFlip(∅)` so layers line up with the fixed ansatz.
pub fn build_circuit(inst: &ForrelationInstance) -> Vec<Gate> {
    let mut gates = Vec::with_capacity(2 * inst.k() + 1);
    gates.push(Gate::HadamardAll);
    for f in &inst.functions {
        gates.push(f.gate());
        gates.push(Gate::HadamardAll);
    }
    gates
}

/// U_F|0^n⟩.
pub fn circuit_state(inst: &ForrelationInstance) -> Result<StateVector> {
    Ok(qstate::simulate(inst.n(), &build_circuit(inst))?)
}

/// Φ as the amplitude of |0^n⟩ in U_F|0^n⟩.
pub fn phi_circuit(inst: &ForrelationInstance) -> Result<Phi> {
    let state = circuit_state(inst)?;
    Phi::from_amplitude(state.amplitudes()[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inst(n: usize, lists: &[&[usize]]) -> ForrelationInstance {
        ForrelationInstance::from_bit_lists(n, lists).unwrap()
    }

    /// Every subset of {1..n} of size ≤ 3, constant first.
    pub(crate) fn all_functions(n: usize) -> Vec<BooleanFunction> {
        (0u64..1 << n)
            .filter(|m| m.count_ones() <= 3)
            .map(|m| BooleanFunction::from_set(QubitSet::from_mask(m)).unwrap())
            .collect()
    }

    pub(crate) fn all_instances(n: usize, k: usize) -> Vec<ForrelationInstance> {
        let fs = all_functions(n);
        let mut out = vec![vec![]];
        for _ in 0..k {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<BooleanFunction>| {
                    fs.iter().map(move |f| {
                        let mut p = prefix.clone();
                        p.push(*f);
                        p
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(|f| ForrelationInstance::new(n, f).unwrap())
            .collect()
    }

    #[test]
    fn encode_worked_example() {
        let x = inst(3, &[&[1, 3], &[], &[2]]).encode();
        assert_eq!(x.bits(), &[1, 0, 1, 0, 0, 0, 0, 1, 0]);
        assert_eq!(x.bit_string(), "101000010");
        assert_eq!(inst(2, &[&[], &[], &[]]).encode().bits(), &[0; 6]);
        assert_eq!(inst(3, &[&[1, 2, 3]]).encode().block(0), &[1, 1, 1]);
    }

    #[test]
    fn decode_examples() {
        let s = EncodedSample::new(3, 3, vec![1, 0, 1, 0, 0, 0, 0, 1, 0]).unwrap();
        assert_eq!(s.decode(), inst(3, &[&[1, 3], &[], &[2]]));
        let z = EncodedSample::new(2, 2, vec![0; 4]).unwrap().decode();
        assert!(z.functions().iter().all(|f| f.is_constant()));
        assert_eq!(
            EncodedSample::new(4, 1, vec![1, 1, 1, 1]),
            Err(ForrelationError::MalformedBlock { block: 1, ones: 4 })
        );
        assert!(matches!(
            EncodedSample::new(3, 2, vec![0; 5]),
            Err(ForrelationError::SampleLength {
                expected: 6,
                got: 5
            })
        ));
        assert_eq!(
            EncodedSample::parse(2, 1, "12"),
            Err(ForrelationError::NonBinary(b'2'))
        );
    }

    #[test]
    fn instance_validation() {
        assert_eq!(
            BooleanFunction::new(&[1, 2, 3, 4]),
            Err(ForrelationError::TooManyBits(4))
        );
        assert!(matches!(
            ForrelationInstance::from_bit_lists(2, &[&[3]]),
            Err(ForrelationError::BitOutOfRange {
                function: 1,
                bit: 3,
                n: 2
            })
        ));
        assert_eq!(
            ForrelationInstance::new(2, vec![]),
            Err(ForrelationError::NoFunctions)
        );
        assert!(inst(3, &[&[1], &[1, 2, 3]]).is_promise_complete());
        assert!(!inst(3, &[&[1], &[1, 2]]).is_promise_complete());
    }

    #[test]
    fn round_trip_exhaustive_small() {
        for n in 1..=3 {
            for k in 1..=3 {
                for i in all_instances(n, k) {
                    assert_eq!(i.encode().decode(), i);
                }
            }
        }
    }

    #[test]
    fn bruteforce_examples() {
        assert_eq!(
            phi_bruteforce(&inst(1, &[&[], &[], &[]])).unwrap().value(),
            1.0
        );
        assert_eq!(phi_bruteforce(&inst(1, &[&[1]])).unwrap().value(), 0.0);
        assert_eq!(
            phi_bruteforce(&inst(2, &[&[1], &[], &[]])).unwrap().value(),
            0.0
        );
    }

    #[test]
    fn bruteforce_matches_independent_oracle() {
        // integer sums and exponents frozen from a separate enumeration script
        let cases: [(usize, &[&[usize]], i64, usize); 6] = [
            (3, &[&[1, 2], &[2, 3]], 8, 9),
            (2, &[&[1, 2], &[1], &[2]], 8, 8),
            (3, &[&[1, 2, 3], &[1], &[2, 3]], 48, 12),
            (2, &[&[1, 2], &[]], 4, 6),
            (3, &[&[1, 2, 3], &[], &[1, 2, 3]], 64, 12),
            (4, &[&[1, 2, 3], &[2, 4], &[1, 3, 4]], 192, 16),
        ];
        for (n, lists, sum, exp) in cases {
            let expected = sum as f64 / 2f64.powf(exp as f64 / 2.0);
            let got = phi_bruteforce(&inst(n, lists)).unwrap().value();
            assert!(
                (got - expected).abs() <= 1e-15,
                "{lists:?}: {got} vs {expected}"
            );
            let circ = phi_circuit(&inst(n, lists)).unwrap().value();
            assert!((circ - expected).abs() <= 1e-10);
        }
    }

    #[test]
    fn bruteforce_capacity() {
        let big = ForrelationInstance::new(5, vec![BooleanFunction::CONSTANT; 5]).unwrap();
        assert!(matches!(
            phi_bruteforce(&big),
            Err(ForrelationError::BruteForceCapacity { kn: 25, max: 24 })
        ));
    }

    #[test]
    fn circuit_layout() {
        let c = build_circuit(&inst(2, &[&[1]]));
        assert_eq!(
            c,
            vec![
                Gate::HadamardAll,
                Gate::PhaseFlip(QubitSet::new(&[1]).unwrap()),
                Gate::HadamardAll
            ]
        );
        let c = build_circuit(&inst(3, &[&[1, 3], &[], &[2]]));
        assert_eq!(c.len(), 7);
        assert_eq!(c[1], Gate::PhaseFlip(QubitSet::new(&[1, 3]).unwrap()));
        assert_eq!(c[3], Gate::PhaseFlip(QubitSet::EMPTY));
        assert_eq!(c[5], Gate::PhaseFlip(QubitSet::new(&[2]).unwrap()));
        assert!(c.iter().step_by(2).all(|g| *g == Gate::HadamardAll));
    }

    #[test]
    fn circuit_identity_for_constant_odd_k() {
        for n in 1..=4 {
            let i = ForrelationInstance::new(n, vec![BooleanFunction::CONSTANT; 3]).unwrap();
            assert!((phi_circuit(&i).unwrap().value() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn phi_rejects_unphysical_values() {
        assert!(Phi::new(1.0 + 1e-13).is_ok());
        assert_eq!(Phi::new(1.1), Err(ForrelationError::PhiOutOfRange(1.1)));
        assert!(matches!(
            Phi::from_amplitude(Complex64::new(0.5, 1e-9)),
            Err(ForrelationError::NonRealAmplitude(_))
        ));
    }

    #[test]
    fn oracle_equivalence_exhaustive_n2() {
        for k in 1..=3 {
            for i in all_instances(2, k) {
                let b = phi_bruteforce(&i).unwrap().value();
                let c = phi_circuit(&i).unwrap().value();
                assert!((b - c).abs() <= 1e-10, "{i:?}: {b} vs {c}");
            }
        }
    }

    #[test]
    fn encoded_sample_serde() {
        let s = inst(3, &[&[1, 3], &[], &[2]]).encode();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"n":3,"k":3,"bits":"101000010"}"#);
        assert_eq!(serde_json::from_str::<EncodedSample>(&json).unwrap(), s);
        assert!(serde_json::from_str::<EncodedSample>(r#"{"n":4,"k":1,"bits":"1111"}"#).is_err());
    }

    fn instance_of(n: usize, k: usize) -> impl Strategy<Value = ForrelationInstance> {
        let f = proptest::sample::subsequence((1..=n).collect::<Vec<_>>(), 0..=n.min(3))
            .prop_map(|b| BooleanFunction::new(&b).unwrap());
        proptest::collection::vec(f, k).prop_map(move |fs| ForrelationInstance::new(n, fs).unwrap())
    }

    pub(crate) fn arb_instance(
        max_n: usize,
        max_k: usize,
    ) -> impl Strategy<Value = ForrelationInstance> {
        (1..=max_n, 1..=max_k).prop_flat_map(|(n, k)| instance_of(n, k))
    }

    /// Instances whose n and k are drawn from the given lists.
    pub(crate) fn arb_instance_shaped(
        ns: Vec<usize>,
        ks: Vec<usize>,
    ) -> impl Strategy<Value = ForrelationInstance> {
        (proptest::sample::select(ns), proptest::sample::select(ks))
            .prop_flat_map(|(n, k)| instance_of(n, k))
    }

    proptest! {
        #[test]
        fn round_trip_random(i in arb_instance(8, 6)) {
            prop_assert_eq!(i.encode().decode(), i);
        }

        #[test]
        fn oracle_equivalence_random(i in arb_instance(4, 4)) {
            prop_assume!(i.n() * i.k() <= 16);
            let b = phi_bruteforce(&i).unwrap().value();
            let c = phi_circuit(&i).unwrap().value();
            prop_assert!((b - c).abs() <= 1e-10);
        }

        #[test]
        fn amplitude_is_real(i in arb_instance(6, 6)) {
            let s = circuit_state(&i).unwrap();
            prop_assert!(s.amplitudes()[0].im.abs() <= IMAGINARY_TOLERANCE);
        }
    }
}
