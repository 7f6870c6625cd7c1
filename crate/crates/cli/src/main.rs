//! `sqss` — command-line front end for the semiquantum secret sharing
//! simulator.
//!
//! Subcommands:
//! - `run`: simulate one full session and report keys, error rates,
//!   detection statistics, probe-information metrics, and efficiency.
//! - `attack-sweep`: sample constraint-violating attacks in parallel and
//!   record whether the checking procedure catches each one.
//! - `verify-theorem1`: check the security boundary from both sides —
//!   compliant attacks must stay invisible and learn nothing, sampled
//!   violating attacks must always be detected.
//! - `efficiency`: report the qubit-efficiency figures for a given `n`.
//!
//! Exit codes: 0 for a completed command (including a protocol run that
//! aborts), 1 when a verification fails or the tool hits a runtime error,
//! 2 for usage or configuration errors.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use sqss_core::adversary::{
    build_entangle_measure, eval_zero_error_constraints, identity_attack, intercept_resend_z,
    params_from_toml, sample_bob_participant, sample_compliant, sample_compliant_params,
    sample_noncompliant, AttackError, AttackModel, InterceptTarget,
};
use sqss_core::analysis::{
    estimate_detection, four_sigma_band, probe_information, qubit_efficiency, realized_counts,
    AnalysisError,
};
use sqss_core::protocol::{run_protocol, ProtocolConfig};

use report::{
    ConstructiveBlock, EfficiencyBlock, EfficiencyCmdReport, KeysBlock, RealizedBlock, RunReport,
    SampledBlock, SweepEntry, SweepReport, VerifyReport, SCHEMA,
};

/// Environment fallback for `--seed`.
const SEED_ENV: &str = "SQSS_SEED";

/// Seed salts so the detection and probe estimates draw streams
/// independent of the reported protocol run.
const DETECTION_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const PROBE_SALT: u64 = 0xd1b5_4a32_d192_ed03;

/// Fixed budget for the constructive half of `verify-theorem1`.
const COMPLIANT_INSTANCES: u64 = 20;
const COMPLIANT_ROUNDS: usize = 2000;
const PROBE_ROUNDS: usize = 600;
const RESIDUAL_TOL: f64 = 1e-9;
const METRIC_TOL: f64 = 1e-6;

/// Round budgets tried per sampled attack before declaring it undetected.
const ESCALATION: [usize; 3] = [400, 2000, 10_000];
/// Constraint-residual floor when sampling violating attacks for verify.
const VERIFY_MIN_RESIDUAL: f64 = 0.1;
/// The sampled half is only meaningful with enough instances.
const VERIFY_MIN_TRIALS: u64 = 100;

#[derive(Parser)]
#[command(
    name = "sqss",
    version,
    about = "Simulator and analysis toolkit for a three-party semiquantum secret sharing protocol"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a full session and emit a JSON report
    #[command(name = "run")]
    Run(RunArgs),
    /// Sample constraint-violating attacks and tally detection
    #[command(name = "attack-sweep")]
    AttackSweep(SweepArgs),
    /// Check that compliant attacks are invisible and learn nothing, and
    /// that sampled violating attacks are detected
    #[command(name = "verify-theorem1")]
    VerifyTheorem1(VerifyArgs),
    /// Report qubit-efficiency figures
    #[command(name = "efficiency")]
    Efficiency(EfficiencyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Target key length in bits; the session prepares 8n rounds
    #[arg(long)]
    n: usize,
    /// Base RNG seed (falls back to SQSS_SEED, then 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Attack model: none, intercept-resend[:particle1|:particle4|:both],
    /// entangle-measure, compliant[:SEED], bob-participant[:SEED]
    #[arg(long, default_value = "none")]
    attack: String,
    /// TOML parameter file for the entangle-measure attack
    #[arg(long, value_name = "FILE")]
    attack_params: Option<PathBuf>,
    /// Probe register dimension for sampled attack models
    #[arg(long, default_value_t = 2)]
    probe_dim: usize,
    /// Fraction of Case-A rounds sacrificed to checking (0 < f < 1)
    #[arg(long, default_value_t = 0.5)]
    check_fraction: f64,
    /// Abort when any case's observed error rate exceeds this threshold
    #[arg(long, default_value_t = 0.0)]
    abort_threshold: f64,
    /// Extra rounds simulated for the detection and probe estimates
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    /// Write the JSON report to this file instead of stdout
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
    /// Write a per-round trace to this file
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Number of attacks to sample
    #[arg(long, default_value_t = 16)]
    trials: u64,
    /// Each sampled attack is exercised for 8n rounds
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Base RNG seed (falls back to SQSS_SEED, then 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Probe register dimension (at least 2)
    #[arg(long, default_value_t = 2)]
    probe_dim: usize,
    /// Smallest accepted constraint residual when sampling
    #[arg(long, default_value_t = 0.1)]
    min_residual: f64,
    /// Write the JSON report to this file instead of stdout
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Base RNG seed (falls back to SQSS_SEED, then 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Probe register dimension (at least 2)
    #[arg(long, default_value_t = 2)]
    probe_dim: usize,
    /// Number of sampled violating attacks (at least 100)
    #[arg(long, default_value_t = 100)]
    trials: u64,
    /// Write the JSON report to this file instead of stdout
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EfficiencyArgs {
    /// Number of key bits the session targets
    #[arg(long)]
    n: u64,
    /// When set (or SQSS_SEED is), also simulate 8n rounds and compare
    /// realized qubit counts against the expected band
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report to this file instead of stdout
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

enum CliError {
    /// Bad flags or configuration input; exit code 2.
    Usage(String),
    /// Verification failure or runtime error; exit code 1.
    Failed(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::AttackSweep(args) => cmd_sweep(args),
        Command::VerifyTheorem1(args) => cmd_verify(args),
        Command::Efficiency(args) => cmd_efficiency(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// `--seed` wins; otherwise SQSS_SEED must parse as u64 when present.
fn resolve_seed(flag: Option<u64>) -> Result<Option<u64>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text.trim().parse::<u64>().map(Some).map_err(|_| {
            CliError::Usage(format!(
                "{SEED_ENV} must be an unsigned integer, got {text:?}"
            ))
        }),
        Err(_) => Ok(None),
    }
}

enum AttackSpec {
    NoAttack,
    Intercept(InterceptTarget),
    EntangleMeasure,
    Compliant(Option<u64>),
    BobParticipant(Option<u64>),
}

fn parse_attack_spec(name: &str) -> Result<AttackSpec, CliError> {
    let (head, tail) = match name.split_once(':') {
        Some((h, t)) => (h, Some(t)),
        None => (name, None),
    };
    let seed_tail = || -> Result<Option<u64>, CliError> {
        tail.map(|t| {
            t.parse::<u64>().map_err(|_| {
                CliError::Usage(format!("attack seed must be an unsigned integer, got {t:?}"))
            })
        })
        .transpose()
    };
    let no_tail = |spec: AttackSpec| match tail {
        None => Ok(spec),
        Some(t) => Err(CliError::Usage(format!(
            "attack {head:?} takes no {t:?} variant"
        ))),
    };
    match head {
        "none" => no_tail(AttackSpec::NoAttack),
        "intercept-resend" => match tail {
            None | Some("particle1") => Ok(AttackSpec::Intercept(InterceptTarget::ParticleToBob)),
            Some("particle4") => Ok(AttackSpec::Intercept(InterceptTarget::ParticleToCharlie)),
            Some("both") => Ok(AttackSpec::Intercept(InterceptTarget::Both)),
            Some(other) => Err(CliError::Usage(format!(
                "unknown intercept-resend variant {other:?}; use particle1, particle4, or both"
            ))),
        },
        "entangle-measure" => no_tail(AttackSpec::EntangleMeasure),
        "compliant" => Ok(AttackSpec::Compliant(seed_tail()?)),
        "bob-participant" => Ok(AttackSpec::BobParticipant(seed_tail()?)),
        other => Err(CliError::Usage(format!(
            "unknown attack {other:?}; known: none, \
             intercept-resend[:particle1|:particle4|:both], entangle-measure, \
             compliant[:SEED], bob-participant[:SEED]"
        ))),
    }
}

/// Maps construction failures of sampled attacks: a bad probe dimension is
/// the user's input, everything else is a tool failure.
fn attack_error(e: AttackError) -> CliError {
    match e {
        AttackError::ProbeDim { .. } => CliError::Usage(e.to_string()),
        other => CliError::Failed(format!("attack construction failed: {other}")),
    }
}

fn build_attack(
    spec: &AttackSpec,
    params_path: Option<&Path>,
    probe_dim: usize,
    run_seed: u64,
) -> Result<AttackModel, CliError> {
    if params_path.is_some() && !matches!(spec, AttackSpec::EntangleMeasure) {
        return Err(CliError::Usage(
            "--attack-params only applies to --attack entangle-measure".to_owned(),
        ));
    }
    match spec {
        AttackSpec::NoAttack => Ok(identity_attack(probe_dim)),
        AttackSpec::Intercept(target) => Ok(intercept_resend_z(*target)),
        AttackSpec::EntangleMeasure => {
            let path = params_path.ok_or_else(|| {
                CliError::Usage(
                    "--attack entangle-measure requires --attack-params FILE".to_owned(),
                )
            })?;
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            let params = params_from_toml(&text)
                .map_err(|e| CliError::Usage(format!("invalid attack parameters: {e}")))?;
            build_entangle_measure(&params)
                .map_err(|e| CliError::Usage(format!("invalid attack parameters: {e}")))
        }
        AttackSpec::Compliant(attack_seed) => {
            sample_compliant(probe_dim, attack_seed.unwrap_or(run_seed)).map_err(attack_error)
        }
        AttackSpec::BobParticipant(attack_seed) => {
            sample_bob_participant(probe_dim, attack_seed.unwrap_or(run_seed)).map_err(attack_error)
        }
    }
}

fn emit<T: Serialize>(output: Option<&Path>, payload: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(payload)
        .map_err(|e| CliError::Failed(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    match output {
        Some(path) => fs::write(path, &text)
            .map_err(|e| CliError::Failed(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".to_owned()));
    }
    let seed = resolve_seed(args.seed)?.unwrap_or(0);
    let mut config = ProtocolConfig::new(args.n, seed);
    config.check_fraction = args.check_fraction;
    config.abort_threshold = args.abort_threshold;
    config.probe_dim = args.probe_dim;
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let spec = parse_attack_spec(&args.attack)?;
    let attack = build_attack(&spec, args.attack_params.as_deref(), args.probe_dim, seed)?;

    let outcome = run_protocol(&config, &attack).map_err(|e| CliError::Failed(e.to_string()))?;

    if let Some(path) = &args.trace {
        let mut text = String::new();
        for record in &outcome.records {
            text.push_str(&report::trace_line(record));
            text.push('\n');
        }
        fs::write(path, &text)
            .map_err(|e| CliError::Failed(format!("cannot write {}: {e}", path.display())))?;
    }

    let mut det_config = config.clone();
    det_config.seed = seed ^ DETECTION_SALT;
    let detection = estimate_detection(&attack, &det_config, args.trials)
        .map_err(|e| CliError::Failed(e.to_string()))?;

    let mut probe_config = config.clone();
    probe_config.seed = seed ^ PROBE_SALT;
    let probe_metrics = match probe_information(&attack, &probe_config, args.trials) {
        Ok(metrics) => Some(metrics),
        Err(AnalysisError::NoProbes | AnalysisError::NoKeyRounds { .. }) => None,
        Err(e) => return Err(CliError::Failed(e.to_string())),
    };

    let efficiency = EfficiencyBlock::from_report(&qubit_efficiency(args.n as u64));
    let realized = realized_counts(&outcome.records);

    let payload = RunReport {
        schema: SCHEMA,
        command: "run",
        attack: args.attack.clone(),
        config,
        aborted: outcome.aborted,
        abort_reason: outcome.abort_reason.clone(),
        error_rates: outcome.error_rates.clone(),
        keys: outcome.keys.as_ref().map(KeysBlock::from_triple),
        detection,
        probe_metrics,
        efficiency,
        realized_counts: realized,
    };
    emit(args.output.as_deref(), &payload)
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".to_owned()));
    }
    if args.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".to_owned()));
    }
    if args.probe_dim < 2 {
        return Err(CliError::Usage(
            "--probe-dim must be at least 2 for sampled attacks".to_owned(),
        ));
    }
    if !(args.min_residual > 0.0) {
        return Err(CliError::Usage("--min-residual must be positive".to_owned()));
    }
    let seed = resolve_seed(args.seed)?.unwrap_or(0);
    let rounds = 8 * args.n;

    let entries: Vec<SweepEntry> = (0..args.trials)
        .into_par_iter()
        .map(|i| -> Result<SweepEntry, CliError> {
            let attack_seed = seed.wrapping_add(i);
            let params = sample_noncompliant(args.probe_dim, attack_seed, args.min_residual)
                .map_err(attack_error)?;
            let max_residual = eval_zero_error_constraints(&params)
                .map_err(|e| CliError::Failed(e.to_string()))?
                .max_residual;
            let model =
                build_entangle_measure(&params).map_err(|e| CliError::Failed(e.to_string()))?;
            let config = ProtocolConfig::new(args.n, attack_seed);
            let estimate = estimate_detection(&model, &config, rounds)
                .map_err(|e| CliError::Failed(e.to_string()))?;
            let rates = estimate
                .per_case
                .iter()
                .map(|(case, det)| (*case, det.rate))
                .collect();
            Ok(SweepEntry {
                index: i,
                attack_seed,
                max_residual,
                rounds,
                rates,
                detected: estimate.any_case_detects(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let all_detected = entries.iter().all(|e| e.detected);
    let payload = SweepReport {
        schema: SCHEMA,
        command: "attack-sweep",
        seed,
        probe_dim: args.probe_dim,
        trials: args.trials,
        rounds_per_attack: rounds,
        all_detected,
        entries,
    };
    emit(args.output.as_deref(), &payload)
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    if args.trials < VERIFY_MIN_TRIALS {
        return Err(CliError::Usage(format!(
            "--trials must be at least {VERIFY_MIN_TRIALS} for the sampled half, got {}",
            args.trials
        )));
    }
    if args.probe_dim < 2 {
        return Err(CliError::Usage("--probe-dim must be at least 2".to_owned()));
    }
    let seed = resolve_seed(args.seed)?.unwrap_or(0);

    // Constructive half: compliant instances must pass every check and
    // leave nothing in the probes.
    let mut compliant_residuals = Vec::with_capacity(COMPLIANT_INSTANCES as usize);
    let mut total_check_failures = 0usize;
    let mut max_trace_distance = 0.0f64;
    let mut max_holevo = 0.0f64;
    for k in 0..COMPLIANT_INSTANCES {
        let attack_seed = seed.wrapping_add(k);
        let params = sample_compliant_params(args.probe_dim, attack_seed).map_err(attack_error)?;
        let residual = eval_zero_error_constraints(&params)
            .map_err(|e| CliError::Failed(e.to_string()))?
            .max_residual;
        compliant_residuals.push(residual);
        let model = build_entangle_measure(&params).map_err(|e| CliError::Failed(e.to_string()))?;
        let det_config = ProtocolConfig::new(1, attack_seed ^ DETECTION_SALT);
        let estimate = estimate_detection(&model, &det_config, COMPLIANT_ROUNDS)
            .map_err(|e| CliError::Failed(e.to_string()))?;
        total_check_failures += estimate.per_case.values().map(|c| c.failures).sum::<usize>();
        let probe_config = ProtocolConfig::new(1, attack_seed ^ PROBE_SALT);
        let metrics = probe_information(&model, &probe_config, PROBE_ROUNDS)
            .map_err(|e| CliError::Failed(e.to_string()))?;
        max_trace_distance = max_trace_distance.max(metrics.trace_distance);
        max_holevo = max_holevo.max(metrics.holevo_bound);
    }
    let max_residual = compliant_residuals.iter().copied().fold(0.0, f64::max);

    // Sampled half: every violating instance must be detected within the
    // escalating round budget.
    let sampled_results: Vec<(u64, f64, bool)> = (0..args.trials)
        .into_par_iter()
        .map(|k| -> Result<(u64, f64, bool), CliError> {
            let attack_seed = seed.wrapping_add(k);
            let params = sample_noncompliant(args.probe_dim, attack_seed, VERIFY_MIN_RESIDUAL)
                .map_err(attack_error)?;
            let residual = eval_zero_error_constraints(&params)
                .map_err(|e| CliError::Failed(e.to_string()))?
                .max_residual;
            let model =
                build_entangle_measure(&params).map_err(|e| CliError::Failed(e.to_string()))?;
            let config = ProtocolConfig::new(1, attack_seed ^ DETECTION_SALT);
            let mut detected = false;
            for rounds in ESCALATION {
                let estimate = estimate_detection(&model, &config, rounds)
                    .map_err(|e| CliError::Failed(e.to_string()))?;
                if estimate.any_case_detects() {
                    detected = true;
                    break;
                }
            }
            Ok((attack_seed, residual, detected))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let undetected_seeds: Vec<u64> = sampled_results
        .iter()
        .filter(|(_, _, detected)| !detected)
        .map(|(s, _, _)| *s)
        .collect();

    let mut violations: Vec<String> = Vec::new();
    if max_residual >= RESIDUAL_TOL {
        violations.push(format!(
            "compliant constraint residual {max_residual:.3e} is not below {RESIDUAL_TOL:.0e}"
        ));
    }
    if total_check_failures > 0 {
        violations.push(format!(
            "{total_check_failures} check failure(s) under compliant attacks"
        ));
    }
    if max_trace_distance >= METRIC_TOL {
        violations.push(format!(
            "compliant probe trace distance {max_trace_distance:.3e} is not below {METRIC_TOL:.0e}"
        ));
    }
    if max_holevo >= METRIC_TOL {
        violations.push(format!(
            "compliant probe Holevo bound {max_holevo:.3e} is not below {METRIC_TOL:.0e}"
        ));
    }
    if !undetected_seeds.is_empty() {
        violations.push(format!(
            "{} sampled violating attack(s) escaped detection (seeds {:?})",
            undetected_seeds.len(),
            undetected_seeds
        ));
    }

    let constructive = ConstructiveBlock {
        instances: COMPLIANT_INSTANCES,
        rounds_each: COMPLIANT_ROUNDS,
        probe_rounds: PROBE_ROUNDS,
        max_residual,
        residuals: compliant_residuals,
        total_check_failures,
        max_trace_distance,
        max_holevo_bound: max_holevo,
        pass: max_residual < RESIDUAL_TOL
            && total_check_failures == 0
            && max_trace_distance < METRIC_TOL
            && max_holevo < METRIC_TOL,
    };
    let sampled = SampledBlock {
        instances: args.trials,
        min_residual: VERIFY_MIN_RESIDUAL,
        residuals: sampled_results.iter().map(|(_, r, _)| *r).collect(),
        rounds_schedule: ESCALATION.to_vec(),
        pass: undetected_seeds.is_empty(),
        undetected_seeds,
    };

    let pass = violations.is_empty();
    let payload = VerifyReport {
        schema: SCHEMA,
        command: "verify-theorem1",
        seed,
        probe_dim: args.probe_dim,
        constructive,
        sampled,
        pass,
    };
    emit(args.output.as_deref(), &payload)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "verify-theorem1 failed: {}",
            violations.join("; ")
        )))
    }
}

fn cmd_efficiency(args: EfficiencyArgs) -> Result<(), CliError> {
    if args.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".to_owned()));
    }
    let seed = resolve_seed(args.seed)?;
    let efficiency = EfficiencyBlock::from_report(&qubit_efficiency(args.n));
    let realized = match seed {
        Some(seed) => {
            let config = ProtocolConfig::new(args.n as usize, seed);
            let attack = identity_attack(1);
            let outcome =
                run_protocol(&config, &attack).map_err(|e| CliError::Failed(e.to_string()))?;
            let counts = realized_counts(&outcome.records);
            let (lo, hi) = four_sigma_band(args.n);
            let total = counts.total_qubits as f64;
            Some(RealizedBlock {
                seed,
                counts,
                expected_total: 40 * args.n,
                four_sigma_lower: lo,
                four_sigma_upper: hi,
                within_band: total >= lo && total <= hi,
            })
        }
        None => None,
    };
    let payload = EfficiencyCmdReport {
        schema: SCHEMA,
        command: "efficiency",
        n: args.n,
        efficiency,
        realized,
    };
    emit(args.output.as_deref(), &payload)
}
