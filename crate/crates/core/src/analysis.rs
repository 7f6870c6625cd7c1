//! Statistical and information-theoretic post-processing.
//!
//! Three measurement layers build on the protocol simulator:
//!
//! * **Detection statistics** — Monte-Carlo estimates of per-case check
//!   failure rates with Wilson score confidence intervals.
//! * **Probe tomography** — exact reduced density matrices of the
//!   attacker's probes conditioned on the dealer's key bit, scored by
//!   trace distance and the Holevo bound. These come from pure-state
//!   partial traces, not sampled probe readouts, so an attack whose probe
//!   factorizes shows metrics at machine precision rather than shot
//!   noise.
//! * **Leakage and efficiency accounting** — chi-squared uniformity tests
//!   for insider leakage, and the qubit-per-key-bit cost of a run.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_rational::Ratio;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::adversary::AttackModel;
use crate::protocol::{
    check_round, Bases, CaseLabel, PartyChoice, ProtocolConfig, ProtocolOutcome, RoundRecord,
    RoundRngs,
};
use crate::qcore::{Label, QcoreError, Statevector, TargetLayout};

/// Two-sided 99% normal quantile used for all reported intervals.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

/// Eigenvalues below this are treated as exact zeros in entropies.
pub const EIGEN_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("trials must be at least 1")]
    ZeroTrials,
    #[error("the attack model carries no probe subsystems")]
    NoProbes,
    #[error("no key-contributing rounds among {observed_rounds} simulated rounds")]
    NoKeyRounds { observed_rounds: usize },
    #[error("histogram needs at least two cells")]
    EmptyHistogram,
    #[error("only {got} key bits available, need at least {need}")]
    InsufficientKeyBits { got: usize, need: usize },
    #[error("density matrices have dimensions {left} and {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error(transparent)]
    Engine(#[from] QcoreError),
}

// ---------------------------------------------------------------------------
// Confidence intervals and detection estimation
// ---------------------------------------------------------------------------

/// Wilson score interval for a binomial proportion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WilsonInterval {
    pub lower: f64,
    pub upper: f64,
}

impl WilsonInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, p: f64) -> bool {
        (self.lower..=self.upper).contains(&p)
    }

    pub fn excludes_zero(&self) -> bool {
        self.lower > 0.0
    }
}

/// Wilson score interval for `successes` out of `trials` at normal
/// quantile `z`. With zero successes the lower bound is exactly 0, and
/// symmetrically the upper bound is exactly 1 at full count.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> WilsonInterval {
    assert!(trials >= 1, "wilson_interval needs at least one trial");
    assert!(successes <= trials);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    WilsonInterval {
        lower: (center - half).max(0.0),
        upper: (center + half).min(1.0),
    }
}

/// Check-failure tally for one case.
#[derive(Clone, Debug, Serialize)]
pub struct CaseDetection {
    pub trials: usize,
    pub failures: usize,
    pub rate: f64,
    pub interval: WilsonInterval,
}

impl CaseDetection {
    fn from_counts(failures: usize, trials: usize) -> Self {
        let rate = if trials == 0 {
            0.0
        } else {
            failures as f64 / trials as f64
        };
        let interval = if trials == 0 {
            WilsonInterval {
                lower: 0.0,
                upper: 1.0,
            }
        } else {
            wilson_interval(failures, trials, Z_99)
        };
        Self {
            trials,
            failures,
            rate,
            interval,
        }
    }
}

/// Per-case detection rates over independently simulated rounds.
#[derive(Clone, Debug, Serialize)]
pub struct DetectionEstimate {
    pub per_case: BTreeMap<CaseLabel, CaseDetection>,
}

impl DetectionEstimate {
    /// True if some case's interval excludes zero failure rate.
    pub fn any_case_detects(&self) -> bool {
        self.per_case.values().any(|c| c.interval.excludes_zero())
    }

    pub fn max_rate(&self) -> f64 {
        self.per_case.values().map(|c| c.rate).fold(0.0, f64::max)
    }
}

fn forced_pair(case: CaseLabel) -> (PartyChoice, PartyChoice) {
    match case {
        CaseLabel::A => (PartyChoice::Sift, PartyChoice::Sift),
        CaseLabel::B => (PartyChoice::Sift, PartyChoice::Ctrl),
        CaseLabel::C => (PartyChoice::Ctrl, PartyChoice::Sift),
        CaseLabel::D => (PartyChoice::Ctrl, PartyChoice::Ctrl),
    }
}

/// Runs `trials` independent rounds with naturally random receiver
/// choices, checks every round, and tallies failures per case. Probes
/// are not measured here; readouts cannot change check statistics.
pub fn estimate_detection(
    attack: &AttackModel,
    config: &ProtocolConfig,
    trials: usize,
) -> Result<DetectionEstimate, AnalysisError> {
    if trials == 0 {
        return Err(AnalysisError::ZeroTrials);
    }
    let bases = Bases::new();
    let mut rngs = RoundRngs::new(config.seed);
    let mut counts: BTreeMap<CaseLabel, (usize, usize)> = BTreeMap::new();
    for round_index in 0..trials {
        let (record, _) =
            crate::protocol::run_round(round_index, attack, &bases, &mut rngs, false, None)?;
        let entry = counts.entry(record.case).or_insert((0, 0));
        entry.1 += 1;
        if !check_round(&record) {
            entry.0 += 1;
        }
    }
    let per_case = CaseLabel::ALL
        .into_iter()
        .map(|case| {
            let (failures, total) = counts.get(&case).copied().unwrap_or((0, 0));
            (case, CaseDetection::from_counts(failures, total))
        })
        .collect();
    Ok(DetectionEstimate { per_case })
}

/// Like [`estimate_detection`] but pins every round to one case.
pub fn detection_for_case(
    attack: &AttackModel,
    config: &ProtocolConfig,
    case: CaseLabel,
    trials: usize,
) -> Result<CaseDetection, AnalysisError> {
    if trials == 0 {
        return Err(AnalysisError::ZeroTrials);
    }
    let bases = Bases::new();
    let mut rngs = RoundRngs::new(config.seed);
    let forced = Some(forced_pair(case));
    let mut failures = 0usize;
    for round_index in 0..trials {
        let (record, _) =
            crate::protocol::run_round(round_index, attack, &bases, &mut rngs, false, forced)?;
        if !check_round(&record) {
            failures += 1;
        }
    }
    Ok(CaseDetection::from_counts(failures, trials))
}

// ---------------------------------------------------------------------------
// Density matrices and probe information
// ---------------------------------------------------------------------------

/// Dense Hermitian density matrix in row-major order.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    dim: usize,
    elems: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            elems: vec![Complex64::ZERO; dim * dim],
        }
    }

    /// Reduced state of the `keep` subsystems of a pure state: the partial
    /// trace over everything else.
    pub fn from_pure(state: &Statevector, keep: &[Label]) -> Result<Self, QcoreError> {
        let layout = TargetLayout::new(state, keep)?;
        let d = layout.target_dim;
        let amps = state.amplitudes();
        let mut elems = vec![Complex64::ZERO; d * d];
        let mut block = vec![Complex64::ZERO; d];
        for &base in &layout.rest_bases {
            for (j, slot) in block.iter_mut().enumerate() {
                *slot = amps[base + layout.offsets[j]];
            }
            for a in 0..d {
                for b in 0..d {
                    elems[a * d + b] += block[a] * block[b].conj();
                }
            }
        }
        Ok(Self { dim: d, elems })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.elems[row * self.dim + col]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.at(i, i).re).sum()
    }

    pub fn add_assign(&mut self, other: &DensityMatrix) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.elems.iter_mut().zip(&other.elems) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.elems {
            *a *= factor;
        }
    }

    /// Real eigenvalues (the matrix is Hermitized first to absorb
    /// floating-point asymmetry).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let d = self.dim;
        let m = nalgebra::DMatrix::from_fn(d, d, |i, j| {
            0.5 * (self.at(i, j) + self.at(j, i).conj())
        });
        m.symmetric_eigen().eigenvalues.iter().copied().collect()
    }

    /// Von Neumann entropy in bits, with tiny eigenvalues clamped to 0.
    pub fn entropy_bits(&self) -> f64 {
        self.eigenvalues()
            .into_iter()
            .filter(|&l| l > EIGEN_FLOOR)
            .map(|l| -l * l.log2())
            .sum()
    }
}

/// `(1/2)‖a − b‖₁` over Hermitian matrices; 0 iff equal, 1 for orthogonal
/// states.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64, AnalysisError> {
    if a.dim() != b.dim() {
        return Err(AnalysisError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let mut diff = a.clone();
    for (x, y) in diff.elems.iter_mut().zip(&b.elems) {
        *x -= y;
    }
    Ok(0.5 * diff.eigenvalues().iter().map(|l| l.abs()).sum::<f64>())
}

/// Holevo quantity `S((ρ0+ρ1)/2) − S(ρ0)/2 − S(ρ1)/2` for an equal-prior
/// binary ensemble, clamped at 0 against rounding.
pub fn holevo_bound(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<f64, AnalysisError> {
    if rho0.dim() != rho1.dim() {
        return Err(AnalysisError::DimensionMismatch {
            left: rho0.dim(),
            right: rho1.dim(),
        });
    }
    let mut avg = rho0.clone();
    avg.add_assign(rho1);
    avg.scale(0.5);
    let chi = avg.entropy_bits() - 0.5 * rho0.entropy_bits() - 0.5 * rho1.entropy_bits();
    Ok(chi.max(0.0))
}

/// Distinguishability of the attacker's probes with respect to the
/// dealer's key bit.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeInfoMetrics {
    pub trace_distance: f64,
    pub holevo_bound: f64,
    /// Key-contributing rounds that entered the two ensembles.
    pub rounds_used: usize,
}

/// Simulates `trials` rounds and splits the exact post-round probe
/// states into two ensembles by the dealer's key bit (the parity of her
/// fresh-qubit reads in key-capable rounds). Returns the trace distance
/// and Holevo bound between the ensemble averages.
pub fn probe_information(
    attack: &AttackModel,
    config: &ProtocolConfig,
    trials: usize,
) -> Result<ProbeInfoMetrics, AnalysisError> {
    if trials == 0 {
        return Err(AnalysisError::ZeroTrials);
    }
    if attack.probes.is_empty() {
        return Err(AnalysisError::NoProbes);
    }
    let probe_labels = attack.probe_labels();
    let probe_dim: usize = attack.probes.iter().map(|(_, d)| *d).product();
    let bases = Bases::new();
    let mut rngs = RoundRngs::new(config.seed);
    let mut sums = [DensityMatrix::zeros(probe_dim), DensityMatrix::zeros(probe_dim)];
    let mut counts = [0usize; 2];
    for round_index in 0..trials {
        let (record, state) =
            crate::protocol::run_round(round_index, attack, &bases, &mut rngs, false, None)?;
        if record.case != CaseLabel::A {
            continue;
        }
        let (rb, rc) = record.alice_z_pair.expect("Case A always reads both fresh qubits");
        let bit = (rb ^ rc) as usize;
        let rho = DensityMatrix::from_pure(&state, &probe_labels)?;
        sums[bit].add_assign(&rho);
        counts[bit] += 1;
    }
    if counts[0] == 0 || counts[1] == 0 {
        return Err(AnalysisError::NoKeyRounds {
            observed_rounds: trials,
        });
    }
    sums[0].scale(1.0 / counts[0] as f64);
    sums[1].scale(1.0 / counts[1] as f64);
    Ok(ProbeInfoMetrics {
        trace_distance: trace_distance(&sums[0], &sums[1])?,
        holevo_bound: holevo_bound(&sums[0], &sums[1])?,
        rounds_used: counts[0] + counts[1],
    })
}

// ---------------------------------------------------------------------------
// Insider leakage
// ---------------------------------------------------------------------------

/// Chi-squared goodness-of-fit against the uniform distribution over the
/// cells; returns (statistic, p-value) with `cells − 1` degrees of
/// freedom.
pub fn chi_squared_uniform(counts: &[u64]) -> Result<(f64, f64), AnalysisError> {
    if counts.len() < 2 {
        return Err(AnalysisError::EmptyHistogram);
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(AnalysisError::EmptyHistogram);
    }
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).expect("positive dof");
    Ok((stat, 1.0 - dist.cdf(stat)))
}

/// Outcome of the insider-leakage uniformity test.
#[derive(Clone, Debug, Serialize)]
pub struct LeakageTest {
    pub key_bits: usize,
    pub groups: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub rejected: bool,
}

/// Minimum key bits before the leakage test is meaningful.
pub const LEAKAGE_MIN_BITS: usize = 64;

/// Tests whether the dealer's key bit is uniform conditioned on what an
/// insider Bob knows: his own share and his probe readout. Pools key
/// rounds from all supplied runs; within each (share, readout) group the
/// dealer's bit should be a fair coin, so the per-group terms
/// `(c0 − c1)²/n` sum to a chi-squared statistic with one degree of
/// freedom per group.
pub fn bob_leakage(
    outcomes: &[ProtocolOutcome],
    significance: f64,
) -> Result<LeakageTest, AnalysisError> {
    let mut groups: BTreeMap<(u8, usize), [u64; 2]> = BTreeMap::new();
    let mut key_bits = 0usize;
    for outcome in outcomes {
        for record in outcome.records.iter().filter(|r| r.used_for_key) {
            let (Some(b), Some((ra_b, ra_c))) = (record.bob_z, record.alice_z_pair) else {
                continue;
            };
            let probe = record
                .probe_outcomes
                .as_ref()
                .and_then(|v| v.first().copied())
                .unwrap_or(0);
            let dealer_bit = (ra_b ^ ra_c) as usize;
            groups.entry((b, probe)).or_insert([0, 0])[dealer_bit] += 1;
            key_bits += 1;
        }
    }
    if key_bits < LEAKAGE_MIN_BITS {
        return Err(AnalysisError::InsufficientKeyBits {
            got: key_bits,
            need: LEAKAGE_MIN_BITS,
        });
    }
    let mut stat = 0.0f64;
    let mut used_groups = 0usize;
    for cells in groups.values() {
        let n = cells[0] + cells[1];
        if n == 0 {
            continue;
        }
        let d = cells[0] as f64 - cells[1] as f64;
        stat += d * d / n as f64;
        used_groups += 1;
    }
    let dist = ChiSquared::new(used_groups as f64).expect("positive dof");
    let p_value = 1.0 - dist.cdf(stat);
    Ok(LeakageTest {
        key_bits,
        groups: used_groups,
        statistic: stat,
        p_value,
        rejected: p_value < significance,
    })
}

// ---------------------------------------------------------------------------
// Efficiency accounting
// ---------------------------------------------------------------------------

/// Qubit-efficiency breakdown: `eta = lambda_s / (lambda_q + lambda_c)`
/// in exact rational arithmetic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EfficiencyReport {
    /// Shared key bits per run target.
    pub lambda_s: u64,
    /// Qubits consumed: 8n four-qubit states plus 2·4n expected fresh
    /// qubits.
    pub lambda_q: u64,
    /// Classical bits counted toward the denominator; announcements that
    /// serve only the security checks are excluded, leaving zero.
    pub lambda_c: u64,
    pub eta: Ratio<u64>,
}

/// Expected resource accounting for target key length `n` (must be ≥ 1):
/// 8n states of four qubits each, 4n expected fresh qubits per receiver,
/// no counted classical bits, hence efficiency exactly 1/40.
pub fn qubit_efficiency(n: u64) -> EfficiencyReport {
    assert!(n >= 1, "n must be at least 1");
    let lambda_s = n;
    let lambda_q = 8 * n * 4 + 2 * (4 * n);
    let lambda_c = 0;
    EfficiencyReport {
        lambda_s,
        lambda_q,
        lambda_c,
        eta: Ratio::new(lambda_s, lambda_q + lambda_c),
    }
}

/// Qubits actually consumed by one simulated run.
#[derive(Clone, Debug, Serialize)]
pub struct RealizedCounts {
    pub rounds: u64,
    /// Four qubits per prepared resource state.
    pub prepared_qubits: u64,
    pub fresh_bob: u64,
    pub fresh_charlie: u64,
    pub total_qubits: u64,
}

pub fn realized_counts(records: &[RoundRecord]) -> RealizedCounts {
    let rounds = records.len() as u64;
    let fresh_bob = records
        .iter()
        .filter(|r| r.bob_choice == PartyChoice::Sift)
        .count() as u64;
    let fresh_charlie = records
        .iter()
        .filter(|r| r.charlie_choice == PartyChoice::Sift)
        .count() as u64;
    let prepared_qubits = 4 * rounds;
    RealizedCounts {
        rounds,
        prepared_qubits,
        fresh_bob,
        fresh_charlie,
        total_qubits: prepared_qubits + fresh_bob + fresh_charlie,
    }
}

/// The `±4σ` band around the expected total qubit count for target `n`:
/// the two fresh-qubit counts are binomial with combined variance `4n`.
pub fn four_sigma_band(n: u64) -> (f64, f64) {
    let expected = 40.0 * n as f64;
    let four_sigma = 8.0 * (n as f64).sqrt();
    (expected - four_sigma, expected + four_sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{
        identity_attack, intercept_resend_z, sample_bob_participant, sample_compliant,
        InterceptTarget,
    };
    use crate::protocol::run_protocol;
    use crate::qcore::named_stream;
    use rand::Rng;

    const TOL: f64 = 1e-9;

    #[test]
    fn wilson_interval_matches_reference_values() {
        // Frozen against the closed-form score interval at z = 1.96:
        // 10/100 → (0.055229, 0.174367).
        let iv = wilson_interval(10, 100, 1.96);
        assert!((iv.lower - 0.055_229).abs() < 1e-6, "{}", iv.lower);
        assert!((iv.upper - 0.174_367).abs() < 1e-6, "{}", iv.upper);
        // Zero successes pin the lower bound to exactly 0.
        let zero = wilson_interval(0, 500, Z_99);
        assert_eq!(zero.lower, 0.0);
        assert!(zero.upper > 0.0);
        // Width shrinks with more trials at fixed rate.
        let narrow = wilson_interval(100, 1000, Z_99);
        let wide = wilson_interval(10, 100, Z_99);
        assert!(narrow.width() < wide.width());
    }

    #[test]
    fn detection_is_zero_without_an_attack() {
        let config = ProtocolConfig::new(4, 11);
        let est = estimate_detection(&identity_attack(1), &config, 2000).unwrap();
        for (case, cd) in &est.per_case {
            assert_eq!(cd.failures, 0, "case {case}");
        }
        assert!(!est.any_case_detects());
    }

    #[test]
    fn forced_case_detection_matches_projector_value() {
        // Computational-basis intercept-resend on the wire to Bob flips
        // half of all pinned reflection-reflection checks.
        let config = ProtocolConfig::new(4, 3);
        let attack = intercept_resend_z(InterceptTarget::ParticleToBob);
        let cd = detection_for_case(&attack, &config, CaseLabel::D, 4000).unwrap();
        assert!(cd.interval.contains(0.5), "rate {}", cd.rate);
        let ca = detection_for_case(&attack, &config, CaseLabel::A, 2000).unwrap();
        assert_eq!(ca.failures, 0);
    }

    #[test]
    fn partial_trace_of_product_state_is_pure() {
        let labels = vec![(Label::from("a"), 2), (Label::from("b"), 3)];
        let state = Statevector::ground(labels).unwrap();
        let rho = DensityMatrix::from_pure(&state, &[Label::from("b")]).unwrap();
        assert_eq!(rho.dim(), 3);
        assert!((rho.trace() - 1.0).abs() < TOL);
        assert!((rho.at(0, 0).re - 1.0).abs() < TOL);
        assert!(rho.entropy_bits() < 1e-9);
    }

    #[test]
    fn partial_trace_of_entangled_pair_is_maximally_mixed() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let amps = vec![
            Complex64::new(r, 0.0),
            Complex64::ZERO,
            Complex64::ZERO,
            Complex64::new(r, 0.0),
        ];
        let state = Statevector::from_amplitudes(
            vec![(Label::from("a"), 2), (Label::from("b"), 2)],
            amps,
        )
        .unwrap();
        let rho = DensityMatrix::from_pure(&state, &[Label::from("a")]).unwrap();
        assert!((rho.at(0, 0).re - 0.5).abs() < TOL);
        assert!(rho.at(0, 1).norm() < TOL);
        assert!((rho.entropy_bits() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn trace_distance_of_orthogonal_states_is_one() {
        let mut zero = DensityMatrix::zeros(2);
        zero.elems[0] = Complex64::ONE;
        let mut one = DensityMatrix::zeros(2);
        one.elems[3] = Complex64::ONE;
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < TOL);
        assert!(trace_distance(&zero, &zero).unwrap() < TOL);
        assert!((holevo_bound(&zero, &one).unwrap() - 1.0).abs() < 1e-9);
        assert!(holevo_bound(&zero, &zero).unwrap() < TOL);
    }

    #[test]
    fn untouched_probes_carry_no_information() {
        let config = ProtocolConfig::new(2, 5);
        let metrics = probe_information(&identity_attack(2), &config, 400).unwrap();
        assert!(metrics.trace_distance < 1e-12);
        assert!(metrics.holevo_bound < 1e-12);
        assert!(metrics.rounds_used > 0);
    }

    #[test]
    fn compliant_probes_factorize_but_copied_probes_leak() {
        let config = ProtocolConfig::new(2, 8);
        let compliant = sample_compliant(2, 31).unwrap();
        let m = probe_information(&compliant, &config, 400).unwrap();
        assert!(m.trace_distance < 1e-6, "trace distance {}", m.trace_distance);
        assert!(m.holevo_bound < 1e-6, "holevo {}", m.holevo_bound);

        // The computational copy records Bob's bit outright, and the
        // dealer's bit is correlated with it, so the ensembles split.
        let copying = intercept_resend_z(InterceptTarget::ParticleToBob);
        let m2 = probe_information(&copying, &config, 400).unwrap();
        assert!(m2.trace_distance > 0.1, "trace distance {}", m2.trace_distance);
    }

    #[test]
    fn chi_squared_uniform_behaves_at_extremes() {
        let (_, p_fair) = chi_squared_uniform(&[250, 260, 245, 245]).unwrap();
        assert!(p_fair > 0.5);
        let (_, p_skew) = chi_squared_uniform(&[500, 10, 10, 10]).unwrap();
        assert!(p_skew < 1e-6);
        assert!(chi_squared_uniform(&[5]).is_err());
        assert!(chi_squared_uniform(&[0, 0]).is_err());
    }

    #[test]
    fn insider_with_compliant_probe_learns_nothing() {
        let attack = sample_bob_participant(2, 12).unwrap();
        let mut outcomes = Vec::new();
        let mut total_bits = 0;
        let mut seed = 0u64;
        while total_bits < 256 {
            let config = ProtocolConfig {
                probe_dim: 2,
                ..ProtocolConfig::new(16, 1000 + seed)
            };
            let outcome = run_protocol(&config, &attack).unwrap();
            assert!(!outcome.aborted, "{:?}", outcome.abort_reason);
            total_bits += outcome.keys.as_ref().unwrap().len();
            outcomes.push(outcome);
            seed += 1;
        }
        let test = bob_leakage(&outcomes, 0.001).unwrap();
        assert!(!test.rejected, "p = {}", test.p_value);
        assert!(test.key_bits >= 256);
    }

    #[test]
    fn leakage_test_needs_enough_bits() {
        let config = ProtocolConfig::new(2, 77);
        let outcome = run_protocol(&config, &identity_attack(1)).unwrap();
        // A single short run yields at most 2 key bits.
        assert!(matches!(
            bob_leakage(std::slice::from_ref(&outcome), 0.001),
            Err(AnalysisError::InsufficientKeyBits { .. })
        ));
    }

    #[test]
    fn leakage_test_flags_a_fabricated_correlation() {
        // Construct records where the dealer's bit always equals Bob's
        // probe readout parity — maximal leakage must be rejected.
        let config = ProtocolConfig {
            abort_threshold: 1.0,
            ..ProtocolConfig::new(64, 13)
        };
        let mut outcome = run_protocol(&config, &identity_attack(1)).unwrap();
        for r in outcome.records.iter_mut().filter(|r| r.used_for_key) {
            let (ra_b, ra_c) = r.alice_z_pair.unwrap();
            r.probe_outcomes = Some(vec![(ra_b ^ ra_c) as usize]);
        }
        let test = bob_leakage(&[outcome], 0.001).unwrap();
        assert!(test.rejected, "p = {}", test.p_value);
    }

    #[test]
    fn efficiency_is_one_in_forty_for_all_n() {
        for n in [1u64, 7, 100, 4096] {
            let report = qubit_efficiency(n);
            assert_eq!(report.lambda_s, n);
            assert_eq!(report.lambda_q, 40 * n);
            assert_eq!(report.lambda_c, 0);
            assert_eq!(report.eta, Ratio::new(1, 40));
            assert_eq!(
                report.eta,
                Ratio::new(report.lambda_s, report.lambda_q + report.lambda_c)
            );
        }
        assert_eq!(qubit_efficiency(10).eta.to_string(), "1/40");
    }

    #[test]
    fn realized_counts_concentrate_near_expectation() {
        let n = 64u64;
        let config = ProtocolConfig {
            abort_threshold: 1.0,
            ..ProtocolConfig::new(n as usize, 2024)
        };
        let outcome = run_protocol(&config, &identity_attack(1)).unwrap();
        let counts = realized_counts(&outcome.records);
        assert_eq!(counts.rounds, 8 * n);
        assert_eq!(counts.prepared_qubits, 32 * n);
        let (lo, hi) = four_sigma_band(n);
        let total = counts.total_qubits as f64;
        assert!(total > lo && total < hi, "total {total} outside [{lo}, {hi}]");
    }

    #[test]
    fn probe_rho_trace_is_preserved_under_attack() {
        let mut rng = named_stream(3, "rho-trace");
        for _ in 0..3 {
            let seed: u64 = rng.random();
            let attack = sample_compliant(2, seed).unwrap();
            let config = ProtocolConfig::new(2, seed);
            let bases = Bases::new();
            let mut rngs = RoundRngs::new(config.seed);
            let (_, state) =
                crate::protocol::run_round(0, &attack, &bases, &mut rngs, false, None).unwrap();
            let rho = DensityMatrix::from_pure(&state, &attack.probe_labels()).unwrap();
            assert!((rho.trace() - 1.0).abs() < 1e-9);
            assert_eq!(rho.dim(), 4);
        }
    }
}
