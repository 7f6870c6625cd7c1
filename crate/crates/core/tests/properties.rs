//! Property-based checks of the engine and attack algebra under random
//! seeds, dimensions, and parameters.

use num_complex::Complex64;
use proptest::prelude::*;

use sqss_core::adversary::{
    build_entangle_measure, compliant_params, eval_zero_error_constraints, params_from_toml,
    sample_noncompliant, UfMode,
};
use sqss_core::analysis::wilson_interval;
use sqss_core::chi::chi_basis_amplitudes;
use sqss_core::protocol::{classify_case, run_protocol, PartyChoice, ProtocolConfig};
use sqss_core::qcore::{named_stream, Label, ProjectorSet, Statevector, UnitaryMatrix};

use sqss_core::adversary::identity_attack;

/// A pure state on the given subsystem dims, scrambled by one Haar
/// unitary over the full space.
fn random_state(dims: &[usize], seed: u64) -> Statevector {
    let subsystems: Vec<(Label, usize)> = dims
        .iter()
        .enumerate()
        .map(|(i, &d)| (Label::from(format!("q{i}").as_str()), d))
        .collect();
    let labels: Vec<Label> = subsystems.iter().map(|(l, _)| l.clone()).collect();
    let mut state = Statevector::ground(subsystems).unwrap();
    let mut rng = named_stream(seed, "property-state");
    let u = UnitaryMatrix::haar_random(state.dim(), &mut rng);
    state.apply_unitary(&u, &labels).unwrap();
    state
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn unitaries_preserve_norm(seed in any::<u64>(), pick in 0usize..6) {
        let dims_options: [&[usize]; 6] =
            [&[2, 2], &[2, 3], &[4, 2], &[2, 2, 2], &[3, 2, 2], &[2, 2, 2, 2]];
        let dims = dims_options[pick];
        let state = random_state(dims, seed);
        prop_assert!((state.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn born_probabilities_are_complete(seed in any::<u64>(), target_dim in 2usize..5) {
        let state = random_state(&[target_dim, 3], seed);
        // A Haar unitary's columns form a random orthonormal basis.
        let mut rng = named_stream(seed, "property-basis");
        let u = UnitaryMatrix::haar_random(target_dim, &mut rng);
        let kets: Vec<Vec<Complex64>> = (0..target_dim)
            .map(|j| (0..target_dim).map(|i| u.at(i, j)).collect())
            .collect();
        let names: Vec<String> = (0..target_dim).map(|i| i.to_string()).collect();
        let basis = ProjectorSet::new(names, kets).unwrap();
        let probs = state
            .outcome_probabilities(&[Label::from("q0")], &basis)
            .unwrap();
        let total: f64 = probs.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9, "total {total}");
        prop_assert!(probs.iter().all(|p| *p >= -1e-12));
    }

    #[test]
    fn measurement_collapse_is_idempotent(seed in any::<u64>()) {
        let mut state = random_state(&[2, 2, 2], seed);
        let basis = ProjectorSet::computational(2);
        let mut rng = named_stream(seed, "property-measure");
        let target = [Label::from("q1")];
        let outcome = state.measure(&target, &basis, &mut rng).unwrap();
        let probs = state.outcome_probabilities(&target, &basis).unwrap();
        prop_assert!((probs[outcome.index] - 1.0).abs() < 1e-9);
        prop_assert!((state.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn resource_basis_members_are_normalized(k in 0usize..4, l in 0usize..4) {
        let amps = chi_basis_amplitudes(k, l);
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wilson_interval_brackets_the_point_estimate(
        trials in 1usize..5000,
        frac in 0.0f64..=1.0,
        z in 0.5f64..4.0,
    ) {
        let successes = ((trials as f64) * frac).floor() as usize;
        let successes = successes.min(trials);
        let iv = wilson_interval(successes, trials, z);
        let p = successes as f64 / trials as f64;
        prop_assert!(iv.lower >= 0.0 && iv.upper <= 1.0);
        prop_assert!(iv.lower <= p + 1e-12 && p <= iv.upper + 1e-12);
    }

    #[test]
    fn compliant_parameters_always_satisfy_constraints(seed in any::<u64>(), dim in 1usize..5) {
        let mut rng = named_stream(seed, "property-compliant");
        let v = UnitaryMatrix::haar_random(dim, &mut rng);
        let params = compliant_params(dim, &v, None).unwrap();
        let report = eval_zero_error_constraints(&params).unwrap();
        prop_assert!(report.max_residual < 1e-12, "residual {}", report.max_residual);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sampled_attack_unitaries_are_unitary(seed in any::<u64>()) {
        let params = sample_noncompliant(3, seed, 0.1).unwrap();
        let model = build_entangle_measure(&params).unwrap();
        for hook in &model.hooks {
            prop_assert!(hook.unitary.max_nonunitarity() < 1e-9);
        }
    }

    #[test]
    fn protocol_runs_replay_for_any_seed(seed in any::<u64>()) {
        let config = ProtocolConfig {
            probe_dim: 1,
            abort_threshold: 1.0,
            ..ProtocolConfig::new(2, seed)
        };
        let attack = identity_attack(1);
        let a = run_protocol(&config, &attack).unwrap();
        let b = run_protocol(&config, &attack).unwrap();
        prop_assert_eq!(a.records, b.records);
        prop_assert_eq!(a.error_rates, b.error_rates);
    }

    #[test]
    fn parameter_files_round_trip_numerically(seed in any::<u64>(), dim in 2usize..4) {
        let mut rng = named_stream(seed, "property-toml");
        let va = UnitaryMatrix::haar_random(dim, &mut rng);
        let vb = UnitaryMatrix::haar_random(dim, &mut rng);
        let col = |u: &UnitaryMatrix, j: usize| -> Vec<Complex64> {
            (0..dim).map(|i| u.at(i, j)).collect()
        };
        let xi = [col(&va, 0), col(&vb, 0), col(&va, 1), col(&vb, 1)];
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let beta = [
            Complex64::new(r, 0.0),
            Complex64::new(0.0, r),
            Complex64::new(r, 0.0),
            Complex64::new(0.0, -r),
        ];
        let fmt_vec = |v: &[Complex64]| -> String {
            let entries: Vec<String> = v
                .iter()
                .map(|c| format!("[{:.17e}, {:.17e}]", c.re, c.im))
                .collect();
            format!("[{}]", entries.join(", "))
        };
        let text = format!(
            "probe_dim = {dim}\nbeta = {}\nxi00 = {}\nxi01 = {}\nxi10 = {}\nxi11 = {}\n\n[uf]\nmode = \"haar-random\"\nseed = {seed}\n",
            fmt_vec(&beta),
            fmt_vec(&xi[0]),
            fmt_vec(&xi[1]),
            fmt_vec(&xi[2]),
            fmt_vec(&xi[3]),
        );
        let parsed = params_from_toml(&text).unwrap();
        prop_assert_eq!(parsed.probe_dim, dim);
        for i in 0..4 {
            prop_assert!((parsed.beta[i] - beta[i]).norm() < 1e-12);
            for j in 0..dim {
                prop_assert!((parsed.xi[i][j] - xi[i][j]).norm() < 1e-12);
            }
        }
        let uf_matches = matches!(parsed.uf, UfMode::Haar { seed: s } if s == seed);
        prop_assert!(uf_matches);
        // Parsed parameters must build an attack identical in residuals.
        let direct = eval_zero_error_constraints(&parsed).unwrap();
        prop_assert!(direct.e_vectors.len() == 16);
    }
}

#[test]
fn case_classification_is_total_and_consistent() {
    for bob in [PartyChoice::Sift, PartyChoice::Ctrl] {
        for charlie in [PartyChoice::Sift, PartyChoice::Ctrl] {
            let case = classify_case(bob, charlie);
            // SIFT on both wires is the only key-carrying class; reflection
            // on both is the only full-state check.
            match (bob, charlie) {
                (PartyChoice::Sift, PartyChoice::Sift) => {
                    assert_eq!(case.to_string(), "A")
                }
                (PartyChoice::Sift, PartyChoice::Ctrl) => {
                    assert_eq!(case.to_string(), "B")
                }
                (PartyChoice::Ctrl, PartyChoice::Sift) => {
                    assert_eq!(case.to_string(), "C")
                }
                (PartyChoice::Ctrl, PartyChoice::Ctrl) => {
                    assert_eq!(case.to_string(), "D")
                }
            }
        }
    }
}
