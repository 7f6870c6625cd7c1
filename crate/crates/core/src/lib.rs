//! Simulation engine and analysis toolkit for a three-party semiquantum
//! secret sharing scheme built on a four-qubit chi-type entangled state.
//!
//! A quantum dealer (Alice) distributes correlated key material to two
//! classical receivers (Bob and Charlie) who can only measure in the
//! computational basis, resend fresh qubits, or reflect particles untouched.
//! The dealer's secret bit for a round is the XOR of the two receivers'
//! bits, so neither receiver alone learns anything.
//!
//! The crate is organised in five layers:
//!
//! * [`qcore`] — a dense statevector engine with labeled subsystems,
//!   unitary application, projective measurement, and deterministic named
//!   RNG streams.
//! * [`chi`] — the chi-type resource state, its regrouped product
//!   expansions, the Bell and sixteen-element chi measurement bases, and
//!   the outcome-correlation table the protocol checks against.
//! * [`protocol`] — the round state machine: dealer preparation, receiver
//!   sift/reflect behaviour, per-case measurements, check sampling, abort
//!   logic, and key derivation.
//! * [`adversary`] — pluggable channel attacks: identity, intercept-resend,
//!   the two-unitary entangle-measure family with per-wire probes, a
//!   compliant (provably undetectable) generator, and a numerical
//!   evaluator of the zero-error constraint system.
//! * [`analysis`] — Monte-Carlo detection estimation, exact reduced-state
//!   leakage metrics (trace distance, Holevo bound), key-uniformity tests,
//!   and the qubit-efficiency accounting.
//!
//! Everything is deterministic given a 64-bit seed: all randomness flows
//! through named ChaCha streams, so any run can be replayed exactly.

pub mod adversary;
pub mod analysis;
pub mod chi;
pub mod protocol;
pub mod qcore;

pub use adversary::{AttackModel, EntangleMeasureParams};
pub use analysis::{DensityMatrix, DetectionEstimate, WilsonInterval};
pub use chi::BellLabel;
pub use protocol::{CaseLabel, PartyChoice, ProtocolConfig, ProtocolOutcome};
pub use qcore::{Label, ProjectorSet, Statevector, UnitaryMatrix};
