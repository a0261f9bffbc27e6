//! Even-to-odd k conversion with the three-CZ gadget
//! `H⊗2 CZ H⊗2 CZ H⊗2 CZ H⊗2 = SWAP H⊗2`.
//!
//! For even k, 4⌈n/2⌉ − 1 functions are appended: three `(-1)^{x_a x_b}` per
//! qubit pair (1,2), (3,4), …, with one constant function between consecutive
//! pairs. Each gadget replaces the final Hadamard on its pair by SWAP·H⊗2 while
//! the other qubits see four bare Hadamards, so for even n the amplitude of
//! |0^n⟩ is unchanged.
//!
//! For odd n the last pair uses an ancilla bit n+1. The ancilla reaches that
//! gadget in |0⟩ (it only ever sees an even number of bare Hadamards before it),
//! so the gadget leaves |+⟩ on a measured wire and the extended Φ equals the
//! original Φ divided by √2. No appended sequence of that length preserves Φ in
//! this case; callers that need the exact value must use even n.

use super::{BooleanFunction, ForrelationError, ForrelationInstance, Result};
use crate::qstate::{Gate, QubitSet};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OddKExtension {
    pub instance: ForrelationInstance,
    /// False when the input already had odd k and was returned unchanged.
    pub modified: bool,
    /// True when an ancilla bit n+1 was added.
    pub ancilla: bool,
}

/// Non-overlapping gadget pairs for n bits; odd n pairs bit n with ancilla n+1.
pub fn gadget_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n.div_ceil(2)).map(|p| (2 * p + 1, 2 * p + 2)).collect()
}

/// The two-qubit gadget as a gate list.
pub fn gadget_sequence() -> Vec<Gate> {
    let cz = Gate::PhaseFlip(QubitSet::from_mask(0b11));
    vec![
        Gate::HadamardAll,
        cz.clone(),
        Gate::HadamardAll,
        cz.clone(),
        Gate::HadamardAll,
        cz,
        Gate::HadamardAll,
    ]
}

/// Appends the gadget functions to an even-k instance; odd k is returned as is.
pub fn oddk_extend(inst: &ForrelationInstance) -> Result<OddKExtension> {
    if inst.k() % 2 == 1 {
        return Ok(OddKExtension {
            instance: inst.clone(),
            modified: false,
            ancilla: false,
        });
    }
    let n = inst.n();
    if n < 2 {
        return Err(ForrelationError::TooFewBitsForGadget(n));
    }
    let ancilla = n % 2 == 1;
    let pairs = gadget_pairs(n);
    let mut functions = inst.functions().to_vec();
    functions.reserve(4 * pairs.len() - 1);
    for (p, &(a, b)) in pairs.iter().enumerate() {
        if p > 0 {
            functions.push(BooleanFunction::CONSTANT);
        }
        let cz = BooleanFunction::new(&[a, b])?;
        functions.extend([cz; 3]);
    }
    let width = if ancilla { n + 1 } else { n };
    Ok(OddKExtension {
        instance: ForrelationInstance::new(width, functions)?,
        modified: true,
        ancilla,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_1_SQRT_2;

    use super::super::tests::arb_instance_shaped;
    use super::super::{phi_bruteforce, phi_circuit};
    use super::*;
    use crate::qstate::{equal_up_to_global_phase, unitary_of};
    use proptest::prelude::*;

    fn inst(n: usize, lists: &[&[usize]]) -> ForrelationInstance {
        ForrelationInstance::from_bit_lists(n, lists).unwrap()
    }

    #[test]
    fn gadget_operator_identity() {
        let lhs = unitary_of(&gadget_sequence(), 2).unwrap();
        let rhs = unitary_of(&[Gate::HadamardAll, Gate::Swap(1, 2)], 2).unwrap();
        assert!(equal_up_to_global_phase(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn counts_follow_formula() {
        let e = oddk_extend(&inst(2, &[&[1], &[1, 2]])).unwrap();
        assert_eq!(e.instance.k(), 5);
        assert!(e.modified && !e.ancilla);

        let e = oddk_extend(&inst(4, &[&[1, 2, 3], &[4]])).unwrap();
        let added = &e.instance.functions()[2..];
        assert_eq!(added.len(), 7);
        assert_eq!(added.iter().filter(|f| f.arity() == 2).count(), 6);
        assert_eq!(added.iter().filter(|f| f.is_constant()).count(), 1);
        assert_eq!(added[3], BooleanFunction::CONSTANT);
        assert_eq!(added[4].bits(), QubitSet::new(&[3, 4]).unwrap());
    }

    #[test]
    fn odd_k_is_unchanged() {
        let i = inst(3, &[&[1], &[2], &[1, 2, 3]]);
        let e = oddk_extend(&i).unwrap();
        assert!(!e.modified);
        assert_eq!(e.instance, i);
        assert_eq!(oddk_extend(&e.instance).unwrap().instance, i);
    }

    #[test]
    fn too_few_bits() {
        assert_eq!(
            oddk_extend(&inst(1, &[&[1], &[]])),
            Err(ForrelationError::TooFewBitsForGadget(1))
        );
    }

    #[test]
    fn original_functions_come_first() {
        let i = inst(3, &[&[1, 2, 3], &[2]]);
        let e = oddk_extend(&i).unwrap();
        assert_eq!(&e.instance.functions()[..2], i.functions());
        assert!(e.instance.is_promise_complete());
        assert_eq!(e.instance.n(), 4);
        assert_eq!(e.instance.k(), 2 + 4 * 2 - 1);
        assert!(e.ancilla);
    }

    #[test]
    fn even_n_preserves_phi() {
        // Φ = 1/2 for this instance (integer sum 4, scale 2^-3)
        let i = inst(2, &[&[1, 2], &[]]);
        let e = oddk_extend(&i).unwrap();
        let before = phi_bruteforce(&i).unwrap().value();
        let after = phi_bruteforce(&e.instance).unwrap().value();
        assert_eq!(before, 0.5);
        assert!((after - before).abs() <= 1e-10);
    }

    #[test]
    fn odd_n_ancilla_scales_phi() {
        let i = inst(3, &[&[1, 2], &[2, 3]]);
        let e = oddk_extend(&i).unwrap();
        let before = phi_circuit(&i).unwrap().value();
        let after = phi_circuit(&e.instance).unwrap().value();
        assert!(before.abs() > 0.3);
        assert!(
            (after - before * FRAC_1_SQRT_2).abs() <= 1e-10,
            "{after} vs {before}"
        );
    }

    proptest! {
        #[test]
        fn preservation_even_n(i in arb_instance_shaped(vec![2, 4], vec![2, 4])) {
            let e = oddk_extend(&i).unwrap();
            prop_assert_eq!(e.instance.k(), i.k() + 4 * i.n().div_ceil(2) - 1);
            let before = phi_circuit(&i).unwrap().value();
            let after = phi_circuit(&e.instance).unwrap().value();
            prop_assert!((after - before).abs() <= 1e-10);
        }

        #[test]
        fn odd_n_relation(i in arb_instance_shaped(vec![3, 5], vec![2, 4])) {
            let e = oddk_extend(&i).unwrap();
            let before = phi_circuit(&i).unwrap().value();
            let after = phi_circuit(&e.instance).unwrap().value();
            prop_assert!((after - before * FRAC_1_SQRT_2).abs() <= 1e-10);
        }
    }
}
