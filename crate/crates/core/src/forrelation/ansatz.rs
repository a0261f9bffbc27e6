//! Fixed controlled-phase ansatz: every ≤3-qubit slot is present for every
//! function, and the sample only selects angles.

use std::f64::consts::PI;

use super::{EncodedSample, Phi, Result};
use crate::qstate::{self, Gate, QubitSet, StateVector};

/// All qubit sets of size 1, 2 and 3 over n qubits: singles first, then pairs,
/// then triples, each group in lexicographic order.
pub fn ansatz_slots(n: usize) -> Vec<QubitSet> {
    let mut slots = Vec::with_capacity(slots_per_function(n));
    for a in 1..=n {
        slots.push(QubitSet::from_mask(1 << (a - 1)));
    }
    for a in 1..=n {
        for b in a + 1..=n {
            slots.push(QubitSet::from_mask(1 << (a - 1) | 1 << (b - 1)));
        }
    }
    for a in 1..=n {
        for b in a + 1..=n {
            for c in b + 1..=n {
                slots.push(QubitSet::from_mask(
                    1 << (a - 1) | 1 << (b - 1) | 1 << (c - 1),
                ));
            }
        }
    }
    slots
}

/// C(n,1) + C(n,2) + C(n,3).
pub fn slots_per_function(n: usize) -> usize {
    n + n * n.saturating_sub(1) / 2 + n * n.saturating_sub(1) * n.saturating_sub(2) / 6
}

/// Number of controlled-phase gates in the fixed ansatz for k functions.
pub fn parameterized_gate_count(n: usize, k: usize) -> usize {
    k * slots_per_function(n)
}

/// λ_J = π ∏_{j∈J} x_j ∏_{l∉J} (1 − x_l) for one n-bit block.
///
/// The product is π exactly when the block is the indicator of `slot`, else 0.
pub fn ansatz_angle(block: &[u8], slot: QubitSet) -> f64 {
    let product: f64 = block
        .iter()
        .enumerate()
        .map(|(l, &x)| {
            let x = f64::from(x);
            if slot.contains(l + 1) {
                x
            } else {
                1.0 - x
            }
        })
        .product();
    PI * product
}

/// Hadamard layers interleaved with one controlled-phase block per function.
pub fn build_fixed_ansatz(sample: &EncodedSample) -> Vec<Gate> {
    let slots = ansatz_slots(sample.n());
    let mut gates = Vec::with_capacity(sample.k() * (slots.len() + 1) + 1);
    gates.push(Gate::HadamardAll);
    for block in sample.blocks() {
        gates.extend(slots.iter().map(|&qubits| Gate::ControlledPhase {
            qubits,
            angle: ansatz_angle(block, qubits),
        }));
        gates.push(Gate::HadamardAll);
    }
    gates
}

pub fn fixed_ansatz_state(sample: &EncodedSample) -> Result<StateVector> {
    Ok(qstate::simulate(sample.n(), &build_fixed_ansatz(sample))?)
}

pub fn phi_fixed_ansatz(sample: &EncodedSample) -> Result<Phi> {
    let state = fixed_ansatz_state(sample)?;
    Phi::from_amplitude(state.amplitudes()[0])
}
