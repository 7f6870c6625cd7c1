//! The three-party secret-sharing protocol state machine.
//!
//! One run executes `8n` strictly sequential rounds. Each round the dealer
//! (Alice) prepares the four-qubit resource state, keeps qubits 2 and 3,
//! and sends qubit 1 to Bob and qubit 4 to Charlie over wires an attacker
//! may touch. Each receiver independently either measures the arriving
//! qubit in the computational basis and returns a freshly prepared qubit
//! in the observed state (SIFT) or reflects the qubit untouched (CTRL).
//! After both replies arrive, the receivers announce their choices and
//! Alice measures according to the resulting case:
//!
//! * Case A `(SIFT, SIFT)` — Bell measurement on her pair (2,3), plus
//!   computational reads of both fresh qubits. These rounds carry the key;
//!   a random subset is sacrificed for checking.
//! * Case B `(SIFT, CTRL)` — Bell measurement on (3, returned 4), plus
//!   computational reads of qubit 2 and Bob's fresh qubit.
//! * Case C `(CTRL, SIFT)` — Bell measurement on (returned 1, 2), plus
//!   computational reads of qubit 3 and Charlie's fresh qubit.
//! * Case D `(CTRL, CTRL)` — measurement of all four qubits in the
//!   sixteen-element entangled basis, which must return the prepared state.
//!
//! Every check exploits the same correlation: the computational pair on
//! two wires determines the Bell state on the complementary pair. Key
//! bits come from unchecked Case-A rounds: Bob's and Charlie's local bits
//! are the shares and the dealer's bit is their parity, which she can
//! also read directly off the fresh qubits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::adversary::{AttackHook, AttackModel, HookOperand, HookPoint};
use crate::chi::{bell_basis, chi00_state, chi_basis, correlated_bell, z_basis, BellLabel};
use crate::qcore::{named_stream, Label, ProjectorSet, QcoreError, Statevector};

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("n must be at least 1")]
    ZeroRounds,
    #[error("check_fraction {value} outside the open interval (0, 1)")]
    CheckFraction { value: f64 },
    #[error("abort_threshold {value} outside [0, 1]")]
    AbortThreshold { value: f64 },
    #[error("probe_dim must be at least 1")]
    ZeroProbeDim,
    #[error("cannot derive a key: no rounds were reserved for key material")]
    EmptyKeySet,
    #[error(transparent)]
    Engine(#[from] QcoreError),
}

/// Run parameters. `n` is the target key length; the dealer prepares `8n`
/// resource states so that Case A is hit roughly `2n` times.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub n: usize,
    /// Fraction of realized Case-A rounds sacrificed for checking.
    pub check_fraction: f64,
    /// A case's error rate above this aborts the run. The channel is
    /// noiseless, so the strict default 0 is sound.
    pub abort_threshold: f64,
    /// Dimension of each attacker probe register.
    pub probe_dim: usize,
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            check_fraction: 0.5,
            abort_threshold: 0.0,
            probe_dim: 4,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.n == 0 {
            return Err(ProtocolError::ZeroRounds);
        }
        if !(self.check_fraction > 0.0 && self.check_fraction < 1.0) {
            return Err(ProtocolError::CheckFraction {
                value: self.check_fraction,
            });
        }
        if !(0.0..=1.0).contains(&self.abort_threshold) {
            return Err(ProtocolError::AbortThreshold {
                value: self.abort_threshold,
            });
        }
        if self.probe_dim == 0 {
            return Err(ProtocolError::ZeroProbeDim);
        }
        Ok(())
    }

    pub fn rounds(&self) -> usize {
        8 * self.n
    }
}

/// A classical party's per-round choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartyChoice {
    #[serde(rename = "SIFT")]
    Sift,
    #[serde(rename = "CTRL")]
    Ctrl,
}

impl PartyChoice {
    fn draw(rng: &mut ChaCha12Rng) -> Self {
        if rng.random_bool(0.5) {
            PartyChoice::Sift
        } else {
            PartyChoice::Ctrl
        }
    }
}

impl std::fmt::Display for PartyChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PartyChoice::Sift => "SIFT",
            PartyChoice::Ctrl => "CTRL",
        })
    }
}

/// Joint choice class for a round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CaseLabel {
    A,
    B,
    C,
    D,
}

impl CaseLabel {
    pub const ALL: [CaseLabel; 4] = [CaseLabel::A, CaseLabel::B, CaseLabel::C, CaseLabel::D];
}

impl std::fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CaseLabel::A => "A",
            CaseLabel::B => "B",
            CaseLabel::C => "C",
            CaseLabel::D => "D",
        })
    }
}

/// (SIFT, SIFT) → A, (SIFT, CTRL) → B, (CTRL, SIFT) → C, (CTRL, CTRL) → D.
pub fn classify_case(bob: PartyChoice, charlie: PartyChoice) -> CaseLabel {
    match (bob, charlie) {
        (PartyChoice::Sift, PartyChoice::Sift) => CaseLabel::A,
        (PartyChoice::Sift, PartyChoice::Ctrl) => CaseLabel::B,
        (PartyChoice::Ctrl, PartyChoice::Sift) => CaseLabel::C,
        (PartyChoice::Ctrl, PartyChoice::Ctrl) => CaseLabel::D,
    }
}

/// Everything observed in one round.
///
/// `alice_z_pair` holds Alice's two computational-basis outcomes, ordered
/// (Bob-side particle, Charlie-side particle): in Case A the two fresh
/// qubits, in Case B (Bob's fresh qubit, retained qubit 2), in Case C
/// (retained qubit 3, Charlie's fresh qubit); absent in Case D.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub round_index: usize,
    pub bob_choice: PartyChoice,
    pub charlie_choice: PartyChoice,
    pub case: CaseLabel,
    /// Bob's measurement outcome on arriving qubit 1 (SIFT only).
    pub bob_z: Option<u8>,
    /// Charlie's measurement outcome on arriving qubit 4 (SIFT only).
    pub charlie_z: Option<u8>,
    /// State of the fresh qubit Bob returned (equals `bob_z`).
    pub fresh_bob: Option<u8>,
    /// State of the fresh qubit Charlie returned (equals `charlie_z`).
    pub fresh_charlie: Option<u8>,
    pub alice_bell: Option<BellLabel>,
    pub alice_z_pair: Option<(u8, u8)>,
    /// Case-D outcome in the sixteen-element basis, as the generator index
    /// pair (k, l); honest rounds always give (0, 0).
    pub alice_fmb: Option<(u8, u8)>,
    pub check_selected: bool,
    pub used_for_key: bool,
    pub check_pass: Option<bool>,
    /// Attacker's computational probe readouts, when the model measures.
    pub probe_outcomes: Option<Vec<usize>>,
}

/// The three derived key strings; `r_a[k] = r_b[k] XOR r_c[k]` for all k.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyTriple {
    pub r_a: Vec<u8>,
    pub r_b: Vec<u8>,
    pub r_c: Vec<u8>,
}

impl KeyTriple {
    pub fn len(&self) -> usize {
        self.r_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_a.is_empty()
    }
}

/// Result of a full run. `keys` is present exactly when the run was not
/// aborted.
#[derive(Clone, Debug)]
pub struct ProtocolOutcome {
    pub records: Vec<RoundRecord>,
    pub aborted: bool,
    pub abort_reason: Option<String>,
    pub error_rates: BTreeMap<CaseLabel, f64>,
    pub keys: Option<KeyTriple>,
}

/// The three measurement bases a run needs, built once.
pub struct Bases {
    pub z: ProjectorSet,
    pub bell: ProjectorSet,
    pub chi: ProjectorSet,
}

impl Bases {
    pub fn new() -> Self {
        Self {
            z: z_basis(),
            bell: bell_basis(),
            chi: chi_basis(),
        }
    }
}

impl Default for Bases {
    fn default() -> Self {
        Self::new()
    }
}

/// Per-role random streams for one run; all derive from the config seed,
/// so runs replay exactly.
pub(crate) struct RoundRngs {
    bob: ChaCha12Rng,
    charlie: ChaCha12Rng,
    alice: ChaCha12Rng,
    attacker: ChaCha12Rng,
}

impl RoundRngs {
    pub(crate) fn new(seed: u64) -> Self {
        Self {
            bob: named_stream(seed, "bob"),
            charlie: named_stream(seed, "charlie"),
            alice: named_stream(seed, "alice"),
            attacker: named_stream(seed, "attacker"),
        }
    }
}

fn wire(name: &str) -> Label {
    Label::from(name)
}

/// Maps a hook operand to the subsystem label carrying it right now.
fn resolve_operand(
    operand: HookOperand,
    attack: &AttackModel,
    bob_fresh: bool,
    charlie_fresh: bool,
) -> Label {
    match operand {
        HookOperand::WireToBob => wire("s1"),
        HookOperand::WireToCharlie => wire("s4"),
        HookOperand::WireFromBob => {
            if bob_fresh {
                wire("fb")
            } else {
                wire("s1")
            }
        }
        HookOperand::WireFromCharlie => {
            if charlie_fresh {
                wire("fc")
            } else {
                wire("s4")
            }
        }
        HookOperand::Probe(i) => attack.probes[i].0.clone(),
    }
}

fn apply_hook(
    state: &mut Statevector,
    hook: &AttackHook,
    attack: &AttackModel,
    bob_fresh: bool,
    charlie_fresh: bool,
) -> Result<(), QcoreError> {
    let targets: Vec<Label> = hook
        .operands
        .iter()
        .map(|&op| resolve_operand(op, attack, bob_fresh, charlie_fresh))
        .collect();
    state.apply_unitary(&hook.unitary, &targets)
}

/// Alice's measurement results for one round.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionOutcomes {
    pub alice_bell: Option<BellLabel>,
    pub alice_z_pair: Option<(u8, u8)>,
    pub alice_fmb: Option<(u8, u8)>,
}

/// Performs the dealer's case-dependent measurements on the round state.
///
/// Expects the canonical labels: retained qubits `s2`/`s3`, returned
/// originals `s1`/`s4` (CTRL wires), fresh qubits `fb`/`fc` (SIFT wires).
/// Order within a case is fixed — Bell (or full-basis) measurement first,
/// then retained-qubit reads, then fresh-qubit reads — so traces replay.
pub fn apply_action(
    case: CaseLabel,
    state: &mut Statevector,
    bases: &Bases,
    rng: &mut ChaCha12Rng,
) -> Result<ActionOutcomes, QcoreError> {
    let bell_pair: Option<[Label; 2]> = match case {
        CaseLabel::A => Some([wire("s2"), wire("s3")]),
        CaseLabel::B => Some([wire("s3"), wire("s4")]),
        CaseLabel::C => Some([wire("s1"), wire("s2")]),
        CaseLabel::D => None,
    };
    let alice_bell = match bell_pair {
        Some(pair) => {
            let outcome = state.measure(&pair, &bases.bell, rng)?;
            Some(BellLabel::from_index(outcome.index))
        }
        None => None,
    };
    let alice_fmb = match case {
        CaseLabel::D => {
            let targets = [wire("s1"), wire("s2"), wire("s3"), wire("s4")];
            let outcome = state.measure(&targets, &bases.chi, rng)?;
            Some(((outcome.index / 4) as u8, (outcome.index % 4) as u8))
        }
        _ => None,
    };
    let mut read = |label: Label| -> Result<u8, QcoreError> {
        Ok(state.measure(&[label], &bases.z, rng)?.index as u8)
    };
    let alice_z_pair = match case {
        CaseLabel::A => {
            let b = read(wire("fb"))?;
            let c = read(wire("fc"))?;
            Some((b, c))
        }
        CaseLabel::B => {
            let s2 = read(wire("s2"))?;
            let b = read(wire("fb"))?;
            Some((b, s2))
        }
        CaseLabel::C => {
            let s3 = read(wire("s3"))?;
            let c = read(wire("fc"))?;
            Some((s3, c))
        }
        CaseLabel::D => None,
    };
    Ok(ActionOutcomes {
        alice_bell,
        alice_z_pair,
        alice_fmb,
    })
}

/// Executes one full round and returns the record together with the
/// post-measurement global state (used for exact probe tomography).
/// `forced` pins the receivers' choices instead of drawing them;
/// `measure_probes` overrides the attack's own setting.
pub(crate) fn run_round(
    round_index: usize,
    attack: &AttackModel,
    bases: &Bases,
    rngs: &mut RoundRngs,
    measure_probes: bool,
    forced: Option<(PartyChoice, PartyChoice)>,
) -> Result<(RoundRecord, Statevector), QcoreError> {
    let labels = ["s1", "s2", "s3", "s4"].map(Label::from);
    let mut state = chi00_state(labels)?;
    for (label, dim) in &attack.probes {
        let probe = Statevector::ground(vec![(label.clone(), *dim)])?;
        state = state.tensor(&probe)?;
    }

    // Outbound transit: qubit 1 to Bob, qubit 4 to Charlie.
    for hook in attack.hooks_at(HookPoint::TransitToBob) {
        apply_hook(&mut state, hook, attack, false, false)?;
    }
    for hook in attack.hooks_at(HookPoint::TransitToCharlie) {
        apply_hook(&mut state, hook, attack, false, false)?;
    }

    // Receivers act independently; SIFT measures and returns a fresh qubit.
    let (bob_choice, charlie_choice) = match forced {
        Some(pair) => pair,
        None => (
            PartyChoice::draw(&mut rngs.bob),
            PartyChoice::draw(&mut rngs.charlie),
        ),
    };
    let mut bob_z = None;
    let mut charlie_z = None;
    if bob_choice == PartyChoice::Sift {
        let outcome = state.measure(&[wire("s1")], &bases.z, &mut rngs.bob)?;
        bob_z = Some(outcome.index as u8);
        let fresh = Statevector::basis(vec![(wire("fb"), 2)], &[outcome.index])?;
        state = state.tensor(&fresh)?;
    }
    if charlie_choice == PartyChoice::Sift {
        let outcome = state.measure(&[wire("s4")], &bases.z, &mut rngs.charlie)?;
        charlie_z = Some(outcome.index as u8);
        let fresh = Statevector::basis(vec![(wire("fc"), 2)], &[outcome.index])?;
        state = state.tensor(&fresh)?;
    }

    // Inbound transit: whatever each receiver sent back.
    let bob_fresh = bob_choice == PartyChoice::Sift;
    let charlie_fresh = charlie_choice == PartyChoice::Sift;
    for hook in attack.hooks_at(HookPoint::ReturnsCombined) {
        apply_hook(&mut state, hook, attack, bob_fresh, charlie_fresh)?;
    }

    let case = classify_case(bob_choice, charlie_choice);
    let outcomes = apply_action(case, &mut state, bases, &mut rngs.alice)?;

    let probe_outcomes = if measure_probes && !attack.probes.is_empty() {
        let dims: Vec<usize> = attack.probes.iter().map(|(_, d)| *d).collect();
        let mut reads = Vec::with_capacity(dims.len());
        for ((label, _), dim) in attack.probes.iter().zip(dims) {
            let basis = ProjectorSet::computational(dim);
            let outcome = state.measure(&[label.clone()], &basis, &mut rngs.attacker)?;
            reads.push(outcome.index);
        }
        Some(reads)
    } else {
        None
    };

    let record = RoundRecord {
        round_index,
        bob_choice,
        charlie_choice,
        case,
        bob_z,
        charlie_z,
        fresh_bob: bob_z,
        fresh_charlie: charlie_z,
        alice_bell: outcomes.alice_bell,
        alice_z_pair: outcomes.alice_z_pair,
        alice_fmb: outcomes.alice_fmb,
        check_selected: false,
        used_for_key: false,
        check_pass: None,
        probe_outcomes,
    };
    Ok((record, state))
}

/// Verifies one record against the correlation its case demands. Cases
/// B and C additionally require the fresh qubit to read back as prepared;
/// Case A requires that for both fresh qubits.
pub fn check_round(record: &RoundRecord) -> bool {
    match record.case {
        CaseLabel::A => {
            let (Some(bz), Some(cz), Some(bell), Some((rb, rc))) = (
                record.bob_z,
                record.charlie_z,
                record.alice_bell,
                record.alice_z_pair,
            ) else {
                return false;
            };
            bell == correlated_bell(bz, cz)
                && Some(rb) == record.fresh_bob
                && Some(rc) == record.fresh_charlie
        }
        CaseLabel::B => {
            let (Some(bz), Some(bell), Some((rb, s2))) =
                (record.bob_z, record.alice_bell, record.alice_z_pair)
            else {
                return false;
            };
            bell == correlated_bell(bz, s2) && Some(rb) == record.fresh_bob
        }
        CaseLabel::C => {
            let (Some(cz), Some(bell), Some((s3, rc))) =
                (record.charlie_z, record.alice_bell, record.alice_z_pair)
            else {
                return false;
            };
            bell == correlated_bell(s3, cz) && Some(rc) == record.fresh_charlie
        }
        CaseLabel::D => record.alice_fmb == Some((0, 0)),
    }
}

/// Summary statistics produced by the sifting step.
#[derive(Clone, Debug)]
pub struct SiftSummary {
    pub checked_case_a: usize,
    pub key_positions: usize,
    pub error_rates: BTreeMap<CaseLabel, f64>,
    pub aborted: bool,
    pub abort_reason: Option<String>,
}

/// Marks check/key positions and computes per-case error rates.
///
/// All Case B/C/D rounds are checks by definition. Of the Case-A rounds,
/// a uniformly random `round(check_fraction · |A|)` are sacrificed; of
/// the remainder, the first `n` (round order) become key positions and
/// any excess is checked as well, so every Case-A round is exactly one of
/// {checked, key}. A case with no checked rounds contributes rate 0.
pub fn sift_and_check(
    records: &mut [RoundRecord],
    config: &ProtocolConfig,
    rng: &mut ChaCha12Rng,
) -> SiftSummary {
    let mut case_a: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.case == CaseLabel::A)
        .map(|(i, _)| i)
        .collect();
    if case_a.len() < 2 {
        let mut error_rates = BTreeMap::new();
        for case in CaseLabel::ALL {
            error_rates.insert(case, 0.0);
        }
        return SiftSummary {
            checked_case_a: 0,
            key_positions: 0,
            error_rates,
            aborted: true,
            abort_reason: Some(format!(
                "only {} Case A round(s); at least 2 are needed to both check and key",
                case_a.len()
            )),
        };
    }

    // Partial Fisher-Yates: the first `check_count` entries become a
    // uniform sample without replacement.
    let check_count = ((config.check_fraction * case_a.len() as f64).round() as usize)
        .min(case_a.len());
    for i in 0..check_count {
        let j = rng.random_range(i..case_a.len());
        case_a.swap(i, j);
    }
    for &idx in &case_a[..check_count] {
        records[idx].check_selected = true;
    }
    let mut remainder: Vec<usize> = case_a[check_count..].to_vec();
    remainder.sort_unstable();
    let key_len = remainder.len().min(config.n);
    for &idx in &remainder[..key_len] {
        records[idx].used_for_key = true;
    }
    for &idx in &remainder[key_len..] {
        records[idx].check_selected = true;
    }
    for record in records.iter_mut() {
        if record.case != CaseLabel::A {
            record.check_selected = true;
        }
        if record.check_selected {
            record.check_pass = Some(check_round(record));
        }
    }

    let mut error_rates = BTreeMap::new();
    let mut aborted = false;
    let mut abort_reason = None;
    for case in CaseLabel::ALL {
        let checked: Vec<&RoundRecord> = records
            .iter()
            .filter(|r| r.case == case && r.check_selected)
            .collect();
        let rate = if checked.is_empty() {
            0.0
        } else {
            let failures = checked
                .iter()
                .filter(|r| r.check_pass == Some(false))
                .count();
            failures as f64 / checked.len() as f64
        };
        if rate > config.abort_threshold && !aborted {
            aborted = true;
            abort_reason = Some(format!(
                "error rate {rate:.4} in Case {case} exceeds threshold {:.4}",
                config.abort_threshold
            ));
        }
        error_rates.insert(case, rate);
    }

    SiftSummary {
        checked_case_a: check_count + (remainder.len() - key_len),
        key_positions: key_len,
        error_rates,
        aborted,
        abort_reason,
    }
}

/// Assembles the key triple from the key-position records: Bob's and
/// Charlie's local bits are the shares, the dealer's bit their parity.
pub fn derive_key(records: &[RoundRecord]) -> Result<KeyTriple, ProtocolError> {
    let mut r_b = Vec::new();
    let mut r_c = Vec::new();
    for record in records.iter().filter(|r| r.used_for_key) {
        let (Some(b), Some(c)) = (record.bob_z, record.charlie_z) else {
            continue;
        };
        r_b.push(b);
        r_c.push(c);
    }
    if r_b.is_empty() {
        return Err(ProtocolError::EmptyKeySet);
    }
    let r_a = r_b.iter().zip(&r_c).map(|(b, c)| b ^ c).collect();
    Ok(KeyTriple { r_a, r_b, r_c })
}

/// Runs the full protocol: `8n` sequential rounds under the given attack,
/// then sifting, checking, and key derivation. Deterministic in
/// `(config.seed, attack)`.
pub fn run_protocol(
    config: &ProtocolConfig,
    attack: &AttackModel,
) -> Result<ProtocolOutcome, ProtocolError> {
    config.validate()?;
    let bases = Bases::new();
    let mut rngs = RoundRngs::new(config.seed);
    let mut records = Vec::with_capacity(config.rounds());
    for round_index in 0..config.rounds() {
        let (record, _) = run_round(
            round_index,
            attack,
            &bases,
            &mut rngs,
            attack.measure_probes,
            None,
        )?;
        records.push(record);
    }
    let mut check_rng = named_stream(config.seed, "check-select");
    let summary = sift_and_check(&mut records, config, &mut check_rng);
    let mut aborted = summary.aborted;
    let mut abort_reason = summary.abort_reason;
    let keys = if aborted {
        None
    } else {
        match derive_key(&records) {
            Ok(triple) => Some(triple),
            Err(ProtocolError::EmptyKeySet) => {
                aborted = true;
                abort_reason = Some(
                    "all Case A rounds were consumed by checking; no key material left"
                        .to_owned(),
                );
                None
            }
            Err(other) => return Err(other),
        }
    };
    Ok(ProtocolOutcome {
        records,
        aborted,
        abort_reason,
        error_rates: summary.error_rates,
        keys,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{identity_attack, intercept_resend_z, InterceptTarget};

    fn blank_record(case: CaseLabel) -> RoundRecord {
        RoundRecord {
            round_index: 0,
            bob_choice: PartyChoice::Ctrl,
            charlie_choice: PartyChoice::Ctrl,
            case,
            bob_z: None,
            charlie_z: None,
            fresh_bob: None,
            fresh_charlie: None,
            alice_bell: None,
            alice_z_pair: None,
            alice_fmb: None,
            check_selected: false,
            used_for_key: false,
            check_pass: None,
            probe_outcomes: None,
        }
    }

    #[test]
    fn case_classification_matches_choice_table() {
        use PartyChoice::*;
        assert_eq!(classify_case(Sift, Sift), CaseLabel::A);
        assert_eq!(classify_case(Sift, Ctrl), CaseLabel::B);
        assert_eq!(classify_case(Ctrl, Sift), CaseLabel::C);
        assert_eq!(classify_case(Ctrl, Ctrl), CaseLabel::D);
    }

    #[test]
    fn check_round_accepts_matching_case_a() {
        let mut r = blank_record(CaseLabel::A);
        r.bob_z = Some(1);
        r.charlie_z = Some(0);
        r.fresh_bob = Some(1);
        r.fresh_charlie = Some(0);
        r.alice_bell = Some(BellLabel::PsiPlus);
        r.alice_z_pair = Some((1, 0));
        assert!(check_round(&r));
        r.alice_bell = Some(BellLabel::PhiPlus);
        assert!(!check_round(&r));
    }

    #[test]
    fn check_round_rejects_fresh_mismatch() {
        let mut r = blank_record(CaseLabel::A);
        r.bob_z = Some(0);
        r.charlie_z = Some(0);
        r.fresh_bob = Some(0);
        r.fresh_charlie = Some(0);
        r.alice_bell = Some(BellLabel::PhiPlus);
        r.alice_z_pair = Some((1, 0)); // Alice read 1 off a fresh |0> qubit
        assert!(!check_round(&r));
    }

    #[test]
    fn check_round_case_d_requires_prepared_state() {
        let mut r = blank_record(CaseLabel::D);
        r.alice_fmb = Some((0, 0));
        assert!(check_round(&r));
        r.alice_fmb = Some((2, 1));
        assert!(!check_round(&r));
    }

    #[test]
    fn honest_run_is_error_free_and_keys_agree() {
        let config = ProtocolConfig::new(8, 42);
        let attack = identity_attack(config.probe_dim);
        let outcome = run_protocol(&config, &attack).unwrap();
        assert!(!outcome.aborted, "{:?}", outcome.abort_reason);
        for (case, rate) in &outcome.error_rates {
            assert_eq!(*rate, 0.0, "case {case}");
        }
        let keys = outcome.keys.expect("keys present on success");
        assert!(!keys.is_empty());
        assert!(keys.len() <= config.n);
        for k in 0..keys.len() {
            assert_eq!(keys.r_a[k], keys.r_b[k] ^ keys.r_c[k]);
        }
        // Alice's direct reads of the fresh qubits agree with the
        // receivers' local bits on every key round.
        for r in outcome.records.iter().filter(|r| r.used_for_key) {
            let (rb, rc) = r.alice_z_pair.unwrap();
            assert_eq!(Some(rb), r.bob_z);
            assert_eq!(Some(rc), r.charlie_z);
        }
        // Key length bookkeeping: every Case A round is checked xor keyed.
        let case_a: Vec<_> = outcome
            .records
            .iter()
            .filter(|r| r.case == CaseLabel::A)
            .collect();
        let checked = case_a.iter().filter(|r| r.check_selected).count();
        let keyed = case_a.iter().filter(|r| r.used_for_key).count();
        assert_eq!(checked + keyed, case_a.len());
        assert_eq!(keyed, keys.len());
        for r in &case_a {
            assert_ne!(r.check_selected, r.used_for_key);
        }
    }

    #[test]
    fn honest_case_d_always_returns_prepared_state() {
        let config = ProtocolConfig::new(4, 7);
        let outcome = run_protocol(&config, &identity_attack(2)).unwrap();
        let mut seen = 0;
        for r in outcome.records.iter().filter(|r| r.case == CaseLabel::D) {
            assert_eq!(r.alice_fmb, Some((0, 0)));
            seen += 1;
        }
        assert!(seen > 0);
    }

    #[test]
    fn runs_replay_exactly_for_a_fixed_seed() {
        let config = ProtocolConfig::new(4, 1234);
        let attack = identity_attack(config.probe_dim);
        let a = run_protocol(&config, &attack).unwrap();
        let b = run_protocol(&config, &attack).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.keys.unwrap(), b.keys.unwrap());
        let c = run_protocol(&ProtocolConfig::new(4, 1235), &attack).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn intercept_resend_on_bob_wire_disturbs_reflection_checks() {
        let config = ProtocolConfig {
            abort_threshold: 1.0, // keep running to collect statistics
            ..ProtocolConfig::new(32, 5)
        };
        let attack = intercept_resend_z(InterceptTarget::ParticleToBob);
        let outcome = run_protocol(&config, &attack).unwrap();
        // Measuring qubit 1 in the computational basis leaves all
        // computational correlations intact but randomizes the Bell/basis
        // checks that involve that wire coherently.
        assert_eq!(outcome.error_rates[&CaseLabel::A], 0.0);
        assert_eq!(outcome.error_rates[&CaseLabel::B], 0.0);
        let c = outcome.error_rates[&CaseLabel::C];
        let d = outcome.error_rates[&CaseLabel::D];
        assert!((c - 0.5).abs() < 0.2, "Case C rate {c}");
        assert!((d - 0.5).abs() < 0.2, "Case D rate {d}");
        // With the default zero threshold the same attack must abort.
        let strict = ProtocolConfig::new(8, 5);
        let aborted = run_protocol(&strict, &attack).unwrap();
        assert!(aborted.aborted);
        assert!(aborted.keys.is_none());
    }

    #[test]
    fn sift_aborts_without_enough_case_a_rounds() {
        let mut records: Vec<RoundRecord> = (0..8)
            .map(|i| {
                let mut r = blank_record(CaseLabel::D);
                r.round_index = i;
                r.alice_fmb = Some((0, 0));
                r
            })
            .collect();
        let config = ProtocolConfig::new(1, 0);
        let mut rng = named_stream(0, "check-select");
        let summary = sift_and_check(&mut records, &config, &mut rng);
        assert!(summary.aborted);
        assert!(summary.abort_reason.unwrap().contains("Case A"));
    }

    #[test]
    fn derive_key_applies_parity_rule() {
        let mut records = Vec::new();
        for (i, (b, c)) in [(1u8, 0u8), (1, 1), (0, 0), (0, 1)].iter().enumerate() {
            let mut r = blank_record(CaseLabel::A);
            r.round_index = i;
            r.bob_z = Some(*b);
            r.charlie_z = Some(*c);
            r.used_for_key = true;
            records.push(r);
        }
        let keys = derive_key(&records).unwrap();
        assert_eq!(keys.r_a, vec![1, 0, 0, 1]);
        assert!(matches!(
            derive_key(&[blank_record(CaseLabel::B)]),
            Err(ProtocolError::EmptyKeySet)
        ));
    }

    #[test]
    fn config_validation_rejects_bad_parameters() {
        assert!(ProtocolConfig::new(0, 1).validate().is_err());
        let mut c = ProtocolConfig::new(1, 1);
        c.check_fraction = 1.0;
        assert!(c.validate().is_err());
        c = ProtocolConfig::new(1, 1);
        c.abort_threshold = 1.5;
        assert!(c.validate().is_err());
        c = ProtocolConfig::new(1, 1);
        c.probe_dim = 0;
        assert!(c.validate().is_err());
        assert!(ProtocolConfig::new(1, 1).validate().is_ok());
    }

    #[test]
    fn case_frequencies_are_roughly_uniform() {
        let config = ProtocolConfig {
            abort_threshold: 1.0,
            ..ProtocolConfig::new(64, 99)
        };
        let outcome = run_protocol(&config, &identity_attack(1)).unwrap();
        let total = outcome.records.len() as f64;
        for case in CaseLabel::ALL {
            let count = outcome
                .records
                .iter()
                .filter(|r| r.case == case)
                .count() as f64;
            assert!(
                (count / total - 0.25).abs() < 0.05,
                "case {case}: {count}/{total}"
            );
        }
    }
}
