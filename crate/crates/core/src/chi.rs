//! The four-qubit chi-type resource state and its measurement structure.
//!
//! The resource state over qubits (1,2,3,4) is
//!
//! ```text
//! (sqrt(2)/4) (|0000> - |0101> + |0011> + |0110>
//!            + |1001> + |1010> + |1100> - |1111>)
//! ```
//!
//! It admits three product regroupings used by the protocol's checks —
//! Bell on (1,2) with computational (3,4), computational (1,2) with Bell
//! (3,4), and computational 1 and 4 around Bell (2,3) — all with the same
//! outcome-correlation table. A sixteen-element orthonormal basis is
//! generated from the state by local generator operators on qubits 1 and
//! 2; the dealer uses it to test reflected rounds.
//!
//! The generator pair matters: a qubit pair supports such a basis exactly
//! when its reduced state is maximally mixed, which holds for the pairs
//! (1,2), (2,3), (3,4), (1,4) but *not* for (1,3) or (2,4) — e.g. a bit
//! flip on both 1 and 3 maps the state to itself, so that family would be
//! degenerate. This module uses (1,2).

use num_complex::Complex64;
use serde::Serialize;

use crate::qcore::{Label, ProjectorSet, QcoreError, Statevector, UnitaryMatrix};

/// sqrt(2)/4, the magnitude of each of the eight basis amplitudes.
const AMP: f64 = std::f64::consts::SQRT_2 / 4.0;

/// Basis strings carrying +sqrt(2)/4 (as 4-bit integers, qubit 1 most
/// significant).
const PLUS_STRINGS: [usize; 6] = [0b0000, 0b0011, 0b0110, 0b1001, 0b1010, 0b1100];
/// Basis strings carrying -sqrt(2)/4.
const MINUS_STRINGS: [usize; 2] = [0b0101, 0b1111];

/// Amplitudes of the resource state, index = 8*q1 + 4*q2 + 2*q3 + q4.
pub fn chi00_amplitudes() -> [Complex64; 16] {
    let mut amps = [Complex64::ZERO; 16];
    for &s in &PLUS_STRINGS {
        amps[s] = Complex64::new(AMP, 0.0);
    }
    for &s in &MINUS_STRINGS {
        amps[s] = Complex64::new(-AMP, 0.0);
    }
    amps
}

/// The resource state as a four-qubit statevector with the given labels.
pub fn chi00_state(labels: [Label; 4]) -> Result<Statevector, QcoreError> {
    let subsystems = labels.into_iter().map(|l| (l, 2)).collect();
    Statevector::from_amplitudes(subsystems, chi00_amplitudes().to_vec())
}

/// The four single-qubit operators generating the chi basis:
/// index 0 → identity, 1 → bit flip, 2 → the real antisymmetric flip
/// (|0> → -|1>, |1> → |0>), 3 → phase flip.
pub fn generator_op(index: usize) -> UnitaryMatrix {
    let z = Complex64::ZERO;
    let o = Complex64::ONE;
    let rows = match index {
        0 => vec![o, z, z, o],
        1 => vec![z, o, o, z],
        2 => vec![z, o, -o, z],
        3 => vec![o, z, z, -o],
        _ => panic!("generator index {index} out of range"),
    };
    UnitaryMatrix::from_rows_trusted(2, rows)
}

/// Chi-basis element (k, l): generator k applied to qubit 1 and generator
/// l applied to qubit 2 of the resource state.
pub fn chi_basis_amplitudes(k: usize, l: usize) -> [Complex64; 16] {
    let labels = ["g1", "g2", "g3", "g4"].map(Label::from);
    let mut state = chi00_state(labels.clone()).expect("resource state is well-formed");
    state
        .apply_unitary(&generator_op(k), &[labels[0].clone()])
        .expect("qubit-1 generator applies");
    state
        .apply_unitary(&generator_op(l), &[labels[1].clone()])
        .expect("qubit-2 generator applies");
    let mut amps = [Complex64::ZERO; 16];
    amps.copy_from_slice(state.amplitudes());
    amps
}

/// The four Bell states on a qubit pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum BellLabel {
    #[serde(rename = "phi+")]
    PhiPlus,
    #[serde(rename = "phi-")]
    PhiMinus,
    #[serde(rename = "psi+")]
    PsiPlus,
    #[serde(rename = "psi-")]
    PsiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
    ];

    pub fn index(self) -> usize {
        match self {
            BellLabel::PhiPlus => 0,
            BellLabel::PhiMinus => 1,
            BellLabel::PsiPlus => 2,
            BellLabel::PsiMinus => 3,
        }
    }

    pub fn from_index(index: usize) -> Self {
        Self::ALL[index]
    }
}

impl std::fmt::Display for BellLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BellLabel::PhiPlus => "phi+",
            BellLabel::PhiMinus => "phi-",
            BellLabel::PsiPlus => "psi+",
            BellLabel::PsiMinus => "psi-",
        };
        f.write_str(s)
    }
}

/// Amplitudes of a Bell state, index = 2*left + right.
pub fn bell_amplitudes(label: BellLabel) -> [Complex64; 4] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let p = Complex64::new(r, 0.0);
    let m = Complex64::new(-r, 0.0);
    let z = Complex64::ZERO;
    match label {
        BellLabel::PhiPlus => [p, z, z, p],
        BellLabel::PhiMinus => [p, z, z, m],
        BellLabel::PsiPlus => [z, p, p, z],
        BellLabel::PsiMinus => [z, p, m, z],
    }
}

/// Single-qubit computational basis with outcomes "0" and "1".
pub fn z_basis() -> ProjectorSet {
    ProjectorSet::computational(2)
}

/// The Bell basis on a qubit pair, ordered as [`BellLabel::ALL`].
pub fn bell_basis() -> ProjectorSet {
    let names = BellLabel::ALL.iter().map(|b| b.to_string()).collect();
    let kets = BellLabel::ALL
        .iter()
        .map(|&b| bell_amplitudes(b).to_vec())
        .collect();
    ProjectorSet::new(names, kets).expect("Bell basis is orthonormal")
}

/// The sixteen-element chi basis on four qubits; outcome index = 4k + l,
/// named "chi[k][l]".
pub fn chi_basis() -> ProjectorSet {
    let mut names = Vec::with_capacity(16);
    let mut kets = Vec::with_capacity(16);
    for k in 0..4 {
        for l in 0..4 {
            names.push(format!("chi{k}{l}"));
            kets.push(chi_basis_amplitudes(k, l).to_vec());
        }
    }
    ProjectorSet::new(names, kets).expect("chi basis is orthonormal")
}

/// The outcome-correlation table shared by all three regroupings: given
/// the two computational outcomes, the Bell outcome on the remaining pair
/// is determined.
pub fn correlated_bell(left: u8, right: u8) -> BellLabel {
    match (left, right) {
        (0, 0) => BellLabel::PhiPlus,
        (0, 1) => BellLabel::PsiMinus,
        (1, 0) => BellLabel::PsiPlus,
        (1, 1) => BellLabel::PhiMinus,
        _ => panic!("bits must be 0 or 1"),
    }
}

fn place_pair_product(
    amps: &mut [Complex64; 16],
    coef: f64,
    left: &[Complex64; 4],
    right: &[Complex64; 4],
) {
    for (i, &a) in left.iter().enumerate() {
        for (j, &b) in right.iter().enumerate() {
            amps[i * 4 + j] += Complex64::new(coef, 0.0) * a * b;
        }
    }
}

fn basis_pair(left: u8, right: u8) -> [Complex64; 4] {
    let mut v = [Complex64::ZERO; 4];
    v[(left * 2 + right) as usize] = Complex64::ONE;
    v
}

/// Expansion of the resource state as Bell states on (1,2) against
/// computational states on (3,4):
/// `(1/2)(|phi+>|00> + |phi->|11> - |psi->|01> + |psi+>|10>)`.
pub fn expansion_bell12_z34() -> [Complex64; 16] {
    let mut amps = [Complex64::ZERO; 16];
    let terms: [(BellLabel, u8, u8, f64); 4] = [
        (BellLabel::PhiPlus, 0, 0, 0.5),
        (BellLabel::PhiMinus, 1, 1, 0.5),
        (BellLabel::PsiMinus, 0, 1, -0.5),
        (BellLabel::PsiPlus, 1, 0, 0.5),
    ];
    for (bell, z3, z4, coef) in terms {
        place_pair_product(&mut amps, coef, &bell_amplitudes(bell), &basis_pair(z3, z4));
    }
    amps
}

/// Expansion of the resource state as computational states on (1,2)
/// against Bell states on (3,4):
/// `(1/2)(|00>|phi+> + |11>|phi-> - |01>|psi-> + |10>|psi+>)`.
pub fn expansion_z12_bell34() -> [Complex64; 16] {
    let mut amps = [Complex64::ZERO; 16];
    let terms: [(u8, u8, BellLabel, f64); 4] = [
        (0, 0, BellLabel::PhiPlus, 0.5),
        (1, 1, BellLabel::PhiMinus, 0.5),
        (0, 1, BellLabel::PsiMinus, -0.5),
        (1, 0, BellLabel::PsiPlus, 0.5),
    ];
    for (z1, z2, bell, coef) in terms {
        place_pair_product(&mut amps, coef, &basis_pair(z1, z2), &bell_amplitudes(bell));
    }
    amps
}

/// Expansion of the resource state as computational states on qubits 1 and
/// 4 around Bell states on (2,3):
/// `(1/2)(|0>|phi+>|0> + |0>|psi->|1> + |1>|psi+>|0> + |1>|phi->|1>)`.
pub fn expansion_z1_bell23_z4() -> [Complex64; 16] {
    let mut amps = [Complex64::ZERO; 16];
    let terms: [(u8, BellLabel, u8); 4] = [
        (0, BellLabel::PhiPlus, 0),
        (0, BellLabel::PsiMinus, 1),
        (1, BellLabel::PsiPlus, 0),
        (1, BellLabel::PhiMinus, 1),
    ];
    for (z1, bell, z4) in terms {
        let bell_amps = bell_amplitudes(bell);
        for (yz, &b) in bell_amps.iter().enumerate() {
            let index = (z1 as usize) * 8 + yz * 2 + z4 as usize;
            amps[index] += Complex64::new(0.5, 0.0) * b;
        }
    }
    amps
}

/// Fidelities |<expansion|state>|² of the three pair expansions against
/// the directly built resource state, in the order
/// (Bell(1,2)×Z(3,4), Z(1,2)×Bell(3,4), Z(1)×Bell(2,3)×Z(4)).
pub fn regrouping_fidelities() -> [f64; 3] {
    let reference = chi00_amplitudes();
    [
        expansion_bell12_z34(),
        expansion_z12_bell34(),
        expansion_z1_bell23_z4(),
    ]
    .map(|expansion| {
        let overlap: Complex64 = reference
            .iter()
            .zip(&expansion)
            .map(|(a, b)| a.conj() * b)
            .sum();
        overlap.norm_sqr()
    })
}

/// True iff every pair expansion reproduces the resource state with
/// fidelity at least 1 − 1e-9.
pub fn check_regroupings() -> bool {
    regrouping_fidelities().iter().all(|f| *f >= 1.0 - 1e-9)
}
