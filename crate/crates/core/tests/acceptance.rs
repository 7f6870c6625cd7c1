//! End-to-end acceptance suite: one test per verifiable property of the
//! artifact, each printing a single PASS line with its measured margin
//! (visible with `cargo test -- --nocapture`). Tolerances are pinned
//! here, not configurable.

use num_complex::Complex64;

use sqss_core::adversary::{
    build_entangle_measure, eval_zero_error_constraints, identity_attack, intercept_resend_z,
    sample_bob_participant, sample_compliant, sample_noncompliant, InterceptTarget,
};
use sqss_core::analysis::{
    bob_leakage, detection_for_case, estimate_detection, four_sigma_band, probe_information,
    qubit_efficiency, realized_counts,
};
use sqss_core::chi::{
    chi00_amplitudes, chi00_state, chi_basis, chi_basis_amplitudes, check_regroupings,
    correlated_bell, regrouping_fidelities,
};
use sqss_core::protocol::{run_protocol, CaseLabel, ProtocolConfig};
use sqss_core::qcore::{Label, Statevector, UnitaryMatrix};

use num_rational::Ratio;

fn four_wires() -> [Label; 4] {
    ["s1", "s2", "s3", "s4"].map(Label::from)
}

#[test]
fn criterion_1_resource_state_algebra() {
    const TOL: f64 = 1e-9;
    let amps = chi00_amplitudes();
    let unit = std::f64::consts::SQRT_2 / 4.0;
    let plus = [0b0000, 0b0011, 0b0110, 0b1001, 0b1010, 0b1100];
    let minus = [0b0101, 0b1111];
    for s in plus {
        assert!((amps[s] - Complex64::new(unit, 0.0)).norm() < TOL);
    }
    for s in minus {
        assert!((amps[s] + Complex64::new(unit, 0.0)).norm() < TOL);
    }
    let zeros = amps.iter().filter(|a| a.norm() < TOL).count();
    assert_eq!(zeros, 8, "exactly eight basis strings carry amplitude");

    assert!(check_regroupings());
    let fidelities = regrouping_fidelities();
    let worst = fidelities.iter().copied().fold(1.0f64, f64::min);
    assert!(worst >= 1.0 - TOL, "worst regrouping fidelity {worst}");
    println!(
        "criterion 1 (resource-state algebra): PASS — amplitude pattern exact, \
         worst regrouping fidelity {worst:.12}"
    );
}

#[test]
fn criterion_2_measurement_basis_orthonormality() {
    const TOL: f64 = 1e-9;
    let kets: Vec<[Complex64; 16]> = (0..4)
        .flat_map(|k| (0..4).map(move |l| chi_basis_amplitudes(k, l)))
        .collect();
    let mut max_dev = 0.0f64;
    for (a, va) in kets.iter().enumerate() {
        for (b, vb) in kets.iter().enumerate() {
            let gram: Complex64 = va.iter().zip(vb).map(|(x, y)| x.conj() * y).sum();
            let target = if a == b { Complex64::ONE } else { Complex64::ZERO };
            max_dev = max_dev.max((gram - target).norm());
        }
    }
    assert!(max_dev < TOL, "Gram deviation {max_dev}");
    // The projector-set constructor independently enforces the same bound.
    assert_eq!(chi_basis().dim(), 16);
    println!(
        "criterion 2 (sixteen-element basis orthonormality): PASS — max Gram \
         deviation {max_dev:.3e}"
    );
}

#[test]
fn criterion_3_honest_completeness() {
    let mut total_key_bits = 0usize;
    for seed in 0..100u64 {
        let config = ProtocolConfig {
            probe_dim: 1,
            ..ProtocolConfig::new(16, seed)
        };
        let attack = identity_attack(config.probe_dim);
        let outcome = run_protocol(&config, &attack).unwrap();
        assert!(!outcome.aborted, "seed {seed}: {:?}", outcome.abort_reason);
        for (case, rate) in &outcome.error_rates {
            assert_eq!(*rate, 0.0, "seed {seed} case {case}");
        }
        for r in &outcome.records {
            if r.check_selected {
                assert_eq!(r.check_pass, Some(true), "seed {seed} round {}", r.round_index);
            }
        }
        let keys = outcome.keys.expect("keys on success");
        for k in 0..keys.len() {
            assert_eq!(keys.r_a[k], keys.r_b[k] ^ keys.r_c[k], "seed {seed} bit {k}");
        }
        // The dealer's independent reads reproduce both shares bit-for-bit.
        let mut alice_b = Vec::new();
        let mut alice_c = Vec::new();
        for r in outcome.records.iter().filter(|r| r.used_for_key) {
            let (rb, rc) = r.alice_z_pair.unwrap();
            alice_b.push(rb);
            alice_c.push(rc);
        }
        assert_eq!(alice_b, keys.r_b, "seed {seed}");
        assert_eq!(alice_c, keys.r_c, "seed {seed}");
        total_key_bits += keys.len();
    }
    println!(
        "criterion 3 (honest completeness): PASS — 100 runs, zero check failures, \
         {total_key_bits} parity-consistent key bits"
    );
}

#[test]
fn criterion_4_deterministic_case_correlations() {
    let config = ProtocolConfig {
        probe_dim: 1,
        abort_threshold: 1.0,
        ..ProtocolConfig::new(2200, 20240)
    };
    let outcome = run_protocol(&config, &identity_attack(1)).unwrap();

    // Case A: the receivers' bit pair fixes the dealer's Bell outcome.
    let mut seen_a = [[0usize; 2]; 2];
    let mut count_a = 0usize;
    for r in outcome.records.iter().filter(|r| r.case == CaseLabel::A) {
        let (x, y) = (r.bob_z.unwrap(), r.charlie_z.unwrap());
        assert_eq!(
            r.alice_bell.unwrap(),
            correlated_bell(x, y),
            "round {}",
            r.round_index
        );
        seen_a[x as usize][y as usize] += 1;
        count_a += 1;
    }
    assert!(count_a >= 4000, "only {count_a} sift-sift rounds");
    for (x, row) in seen_a.iter().enumerate() {
        for (y, &c) in row.iter().enumerate() {
            assert!(c > 0, "bit pair ({x},{y}) never observed");
        }
    }

    // Case B: Bob's bit with the dealer's retained read fixes the Bell
    // outcome on (3, returned 4).
    let mut count_b = 0usize;
    for r in outcome.records.iter().filter(|r| r.case == CaseLabel::B) {
        let (fresh_read, s2) = r.alice_z_pair.unwrap();
        assert_eq!(r.alice_bell.unwrap(), correlated_bell(r.bob_z.unwrap(), s2));
        assert_eq!(Some(fresh_read), r.fresh_bob);
        count_b += 1;
    }
    // Case C: mirrored for Charlie on (returned 1, 2).
    let mut count_c = 0usize;
    for r in outcome.records.iter().filter(|r| r.case == CaseLabel::C) {
        let (s3, fresh_read) = r.alice_z_pair.unwrap();
        assert_eq!(
            r.alice_bell.unwrap(),
            correlated_bell(s3, r.charlie_z.unwrap())
        );
        assert_eq!(Some(fresh_read), r.fresh_charlie);
        count_c += 1;
    }
    assert!(count_b >= 4000 && count_c >= 4000, "B={count_b} C={count_c}");
    println!(
        "criterion 4 (deterministic case correlations): PASS — 0 exceptions over \
         A={count_a}, B={count_b}, C={count_c} rounds"
    );
}

#[test]
fn criterion_5_undetectable_family_leaks_nothing() {
    const METRIC_TOL: f64 = 1e-6;
    const ROUNDS_PER_ATTACK: usize = 10_000;
    let mut worst_distance = 0.0f64;
    let mut worst_holevo = 0.0f64;
    for seed in 0..20u64 {
        let attack = sample_compliant(2, seed).unwrap();
        let config = ProtocolConfig {
            probe_dim: 2,
            ..ProtocolConfig::new(16, 9000 + seed)
        };
        let detection = estimate_detection(&attack, &config, ROUNDS_PER_ATTACK).unwrap();
        for (case, cd) in &detection.per_case {
            assert_eq!(
                cd.failures, 0,
                "seed {seed} case {case}: {} failures in {} rounds",
                cd.failures, cd.trials
            );
        }
        let metrics = probe_information(&attack, &config, 1200).unwrap();
        assert!(
            metrics.trace_distance < METRIC_TOL,
            "seed {seed}: trace distance {}",
            metrics.trace_distance
        );
        assert!(
            metrics.holevo_bound < METRIC_TOL,
            "seed {seed}: holevo {}",
            metrics.holevo_bound
        );
        worst_distance = worst_distance.max(metrics.trace_distance);
        worst_holevo = worst_holevo.max(metrics.holevo_bound);
    }
    println!(
        "criterion 5 (undetectable attack family): PASS — 20 attacks, 0 failures in \
         {} rounds each, worst trace distance {worst_distance:.3e}, worst holevo \
         {worst_holevo:.3e}",
        ROUNDS_PER_ATTACK
    );
}

#[test]
fn criterion_6_noncompliant_attacks_are_detected() {
    const MIN_RESIDUAL: f64 = 0.1;
    const ATTACKS: u64 = 100;
    let mut escalations = 0usize;
    for seed in 0..ATTACKS {
        let params = sample_noncompliant(2, seed, MIN_RESIDUAL).unwrap();
        let report = eval_zero_error_constraints(&params).unwrap();
        assert!(report.max_residual > MIN_RESIDUAL, "seed {seed}");
        let attack = build_entangle_measure(&params).unwrap();
        let config = ProtocolConfig {
            probe_dim: 2,
            ..ProtocolConfig::new(16, 31_000 + seed)
        };
        let mut detected = false;
        for trials in [400usize, 2_000, 10_000] {
            let est = estimate_detection(&attack, &config, trials).unwrap();
            if est.any_case_detects() {
                detected = true;
                break;
            }
            escalations += 1;
        }
        assert!(
            detected,
            "seed {seed}: residual {} but no case interval excludes zero",
            report.max_residual
        );
    }
    println!(
        "criterion 6 (constraint-violating attacks detected): PASS — {ATTACKS} \
         sampled attacks all detected at 99% confidence ({escalations} escalations)"
    );
}

#[test]
fn criterion_7_intercept_resend_oracle_match() {
    // Closed-form value: copy the Bob-bound qubit into a probe, then
    // project the four wires onto the sixteen-element basis.
    let mut state = chi00_state(four_wires())
        .unwrap()
        .tensor(&Statevector::ground(vec![(Label::from("eb"), 2)]).unwrap())
        .unwrap();
    let copy = UnitaryMatrix::permutation(&[0, 1, 3, 2]).unwrap();
    state
        .apply_unitary(&copy, &[Label::from("s1"), Label::from("eb")])
        .unwrap();
    let probs = state
        .outcome_probabilities(&four_wires(), &chi_basis())
        .unwrap();
    let oracle = 1.0 - probs[0];
    assert!((oracle - 0.5).abs() < 1e-12, "oracle {oracle}");

    let attack = intercept_resend_z(InterceptTarget::ParticleToBob);
    let config = ProtocolConfig::new(16, 700);
    let cd = detection_for_case(&attack, &config, CaseLabel::D, 10_000).unwrap();
    assert!(
        cd.interval.contains(oracle),
        "oracle {oracle} outside [{}, {}]",
        cd.interval.lower,
        cd.interval.upper
    );
    println!(
        "criterion 7 (intercept-resend oracle): PASS — closed form {oracle:.6}, \
         Monte-Carlo {:.4} in [{:.4}, {:.4}] over {} rounds",
        cd.rate, cd.interval.lower, cd.interval.upper, cd.trials
    );
}

#[test]
fn criterion_8_qubit_efficiency() {
    for n in [1u64, 2, 10, 64, 1000, 123_457] {
        let report = qubit_efficiency(n);
        assert_eq!(report.eta, Ratio::new(1, 40), "n = {n}");
        assert_eq!(report.lambda_q, 40 * n);
        assert_eq!(report.lambda_c, 0);
    }
    let n = 64u64;
    let mut totals = Vec::new();
    for seed in [1u64, 2, 3] {
        let config = ProtocolConfig {
            probe_dim: 1,
            abort_threshold: 1.0,
            ..ProtocolConfig::new(n as usize, seed)
        };
        let outcome = run_protocol(&config, &identity_attack(1)).unwrap();
        let counts = realized_counts(&outcome.records);
        let (lo, hi) = four_sigma_band(n);
        let total = counts.total_qubits as f64;
        assert!(
            total > lo && total < hi,
            "seed {seed}: {total} outside [{lo:.1}, {hi:.1}]"
        );
        totals.push(counts.total_qubits);
    }
    println!(
        "criterion 8 (qubit efficiency): PASS — eta = 1/40 for all n, realized \
         totals {totals:?} within 4 sigma of {}",
        40 * n
    );
}

#[test]
fn criterion_9_insider_uniformity() {
    const SIGNIFICANCE: f64 = 0.001;
    const MIN_BITS: usize = 1024;
    let attack = sample_bob_participant(2, 63).unwrap();
    let mut outcomes = Vec::new();
    let mut bits = 0usize;
    let mut seed = 0u64;
    while bits < MIN_BITS {
        let config = ProtocolConfig {
            probe_dim: 2,
            ..ProtocolConfig::new(64, 50_000 + seed)
        };
        let outcome = run_protocol(&config, &attack).unwrap();
        assert!(!outcome.aborted, "compliant insider must never trip a check");
        bits += outcome.keys.as_ref().unwrap().len();
        outcomes.push(outcome);
        seed += 1;
    }
    let test = bob_leakage(&outcomes, SIGNIFICANCE).unwrap();
    assert!(test.key_bits >= MIN_BITS);
    assert!(
        !test.rejected,
        "uniformity rejected: statistic {} over {} groups, p = {}",
        test.statistic, test.groups, test.p_value
    );
    println!(
        "criterion 9 (insider learns nothing): PASS — {} key bits, {} groups, \
         p = {:.4}",
        test.key_bits, test.groups, test.p_value
    );
}
