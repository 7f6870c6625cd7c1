//! JSON report schema (version `sqss-report/v1`) and the per-round trace
//! format. Field order is fixed by struct declaration order and map keys
//! are sorted, so identical runs produce byte-identical reports.

use std::collections::BTreeMap;

use serde::Serialize;

use sqss_core::analysis::{
    DetectionEstimate, EfficiencyReport, ProbeInfoMetrics, RealizedCounts,
};
use sqss_core::protocol::{CaseLabel, KeyTriple, ProtocolConfig, RoundRecord};

pub const SCHEMA: &str = "sqss-report/v1";

/// Key material block: bit counts plus hex encodings.
#[derive(Serialize)]
pub struct KeysBlock {
    pub length: usize,
    pub r_a: String,
    pub r_b: String,
    pub r_c: String,
}

impl KeysBlock {
    pub fn from_triple(keys: &KeyTriple) -> Self {
        Self {
            length: keys.len(),
            r_a: bits_to_hex(&keys.r_a),
            r_b: bits_to_hex(&keys.r_b),
            r_c: bits_to_hex(&keys.r_c),
        }
    }
}

/// Packs bits most-significant-bit first; the final byte is zero-padded
/// on the right when the length is not a multiple of eight.
pub fn bits_to_hex(bits: &[u8]) -> String {
    let mut out = String::with_capacity(bits.len().div_ceil(8) * 2);
    for chunk in bits.chunks(8) {
        let mut byte = 0u8;
        for (i, &b) in chunk.iter().enumerate() {
            byte |= (b & 1) << (7 - i);
        }
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

#[derive(Serialize)]
pub struct EfficiencyBlock {
    pub lambda_s: u64,
    pub lambda_q: u64,
    pub lambda_c: u64,
    pub eta: String,
    pub eta_float: f64,
}

impl EfficiencyBlock {
    pub fn from_report(report: &EfficiencyReport) -> Self {
        let num = *report.eta.numer() as f64;
        let den = *report.eta.denom() as f64;
        Self {
            lambda_s: report.lambda_s,
            lambda_q: report.lambda_q,
            lambda_c: report.lambda_c,
            eta: report.eta.to_string(),
            eta_float: num / den,
        }
    }
}

#[derive(Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub command: &'static str,
    pub attack: String,
    pub config: ProtocolConfig,
    pub aborted: bool,
    pub abort_reason: Option<String>,
    pub error_rates: BTreeMap<CaseLabel, f64>,
    pub keys: Option<KeysBlock>,
    pub detection: DetectionEstimate,
    pub probe_metrics: Option<ProbeInfoMetrics>,
    pub efficiency: EfficiencyBlock,
    pub realized_counts: RealizedCounts,
}

#[derive(Serialize)]
pub struct SweepEntry {
    pub index: u64,
    pub attack_seed: u64,
    pub max_residual: f64,
    pub rounds: usize,
    pub rates: BTreeMap<CaseLabel, f64>,
    pub detected: bool,
}

#[derive(Serialize)]
pub struct SweepReport {
    pub schema: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub probe_dim: usize,
    pub trials: u64,
    pub rounds_per_attack: usize,
    pub all_detected: bool,
    pub entries: Vec<SweepEntry>,
}

#[derive(Serialize)]
pub struct ConstructiveBlock {
    pub instances: u64,
    pub rounds_each: usize,
    pub probe_rounds: usize,
    pub max_residual: f64,
    /// Constraint residual of each compliant instance, in instance order.
    pub residuals: Vec<f64>,
    pub total_check_failures: usize,
    pub max_trace_distance: f64,
    pub max_holevo_bound: f64,
    pub pass: bool,
}

#[derive(Serialize)]
pub struct SampledBlock {
    pub instances: u64,
    pub min_residual: f64,
    /// Constraint residual of each sampled instance, in instance order.
    pub residuals: Vec<f64>,
    pub rounds_schedule: Vec<usize>,
    pub undetected_seeds: Vec<u64>,
    pub pass: bool,
}

#[derive(Serialize)]
pub struct VerifyReport {
    pub schema: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub probe_dim: usize,
    pub constructive: ConstructiveBlock,
    pub sampled: SampledBlock,
    pub pass: bool,
}

#[derive(Serialize)]
pub struct RealizedBlock {
    pub seed: u64,
    pub counts: RealizedCounts,
    pub expected_total: u64,
    pub four_sigma_lower: f64,
    pub four_sigma_upper: f64,
    pub within_band: bool,
}

#[derive(Serialize)]
pub struct EfficiencyCmdReport {
    pub schema: &'static str,
    pub command: &'static str,
    pub n: u64,
    pub efficiency: EfficiencyBlock,
    pub realized: Option<RealizedBlock>,
}

fn opt_bit(bit: Option<u8>) -> String {
    bit.map_or_else(|| "-".to_owned(), |b| b.to_string())
}

fn opt_flag(flag: Option<bool>) -> &'static str {
    match flag {
        Some(true) => "yes",
        Some(false) => "no",
        None => "-",
    }
}

/// One trace line per round with a fixed field order:
/// `round bob charlie case bob_z charlie_z fresh_bob fresh_charlie bell
/// alice_z fmb checked key pass probes`.
pub fn trace_line(record: &RoundRecord) -> String {
    let bell = record
        .alice_bell
        .map_or_else(|| "-".to_owned(), |b| b.to_string());
    let alice_z = record
        .alice_z_pair
        .map_or_else(|| "--".to_owned(), |(a, b)| format!("{a}{b}"));
    let fmb = record
        .alice_fmb
        .map_or_else(|| "--".to_owned(), |(k, l)| format!("{k}{l}"));
    let probes = record.probe_outcomes.as_ref().map_or_else(
        || "-".to_owned(),
        |v| {
            v.iter()
                .map(|o| o.to_string())
                .collect::<Vec<_>>()
                .join(",")
        },
    );
    format!(
        "round={} bob={} charlie={} case={} bob_z={} charlie_z={} fresh_bob={} \
         fresh_charlie={} bell={} alice_z={} fmb={} checked={} key={} pass={} probes={}",
        record.round_index,
        record.bob_choice,
        record.charlie_choice,
        record.case,
        opt_bit(record.bob_z),
        opt_bit(record.charlie_z),
        opt_bit(record.fresh_bob),
        opt_bit(record.fresh_charlie),
        bell,
        alice_z,
        fmb,
        if record.check_selected { "yes" } else { "no" },
        if record.used_for_key { "yes" } else { "no" },
        opt_flag(record.check_pass),
        probes,
    )
}
