//! Channel attack models and the zero-error constraint evaluator.
//!
//! An attack is a set of unitary hooks the simulator fires while particles
//! transit between the dealer and the receivers, together with auxiliary
//! probe registers the attacker keeps. The central family is the
//! two-unitary entangle-measure attack: one unitary `U_E` entangles each
//! outgoing particle with a private probe, and a second unitary `U_F` acts
//! on whatever returns (reflected originals or fresh qubits) together with
//! the probes.
//!
//! `U_E` is specified by four amplitudes `β` and four probe states `ξ`:
//!
//! ```text
//! U_E |0>|e0> = β00 |0>|ξ00> + β01 |1>|ξ01>
//! U_E |1>|e0> = β10 |0>|ξ10> + β11 |1>|ξ11>
//! ```
//!
//! Those two columns extend to a unitary iff they are orthonormal, which
//! reduces to the cross condition `β00* β10 <ξ00|ξ10> + β01* β11 <ξ01|ξ11> = 0`.
//! The remaining columns are completed deterministically; the protocol
//! never routes amplitude through them.
//!
//! [`eval_zero_error_constraints`] computes the sixteen probe-pair vectors
//! `E_xyzw` that appear when both wires of the four-qubit resource state
//! are attacked, and scores how far the parameters are from the
//! undetectable family: eight of the vectors must vanish and the remaining
//! eight must agree in four signed pairs. Compliant attacks (identity on
//! the wire, arbitrary unitaries on the probes) satisfy every constraint
//! exactly and are provably invisible to all four protocol checks.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;

use crate::chi::chi00_amplitudes;
use crate::qcore::{named_stream, Label, QcoreError, UnitaryMatrix};

use thiserror::Error;

/// Tolerance on the β-row and ξ normalization invariants.
pub const PARAM_NORM_TOL: f64 = 1e-9;

/// Tolerance on the column-orthogonality condition that makes the two
/// specified columns of `U_E` extendable to a unitary.
pub const EXTENSION_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("probe dimension {dim} is not supported here (need at least {min})")]
    ProbeDim { dim: usize, min: usize },
    #[error("{name} has {actual} components, expected {expected}")]
    VectorLength {
        name: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("{name} has norm {norm} (must be 1 within {PARAM_NORM_TOL:.0e})")]
    NotNormalized { name: String, norm: f64 },
    #[error(
        "columns defined by (beta, xi) cannot extend to a unitary: \
         |beta00* beta10 <xi00|xi10> + beta01* beta11 <xi01|xi11>| = {overlap:.3e} \
         exceeds {EXTENSION_TOL:.0e}"
    )]
    NotExtensible { overlap: f64 },
    #[error("return-hook unitary has dimension {actual}, expected {expected}")]
    ReturnHookDim { expected: usize, actual: usize },
    #[error("could not sample non-compliant parameters after {attempts} attempts")]
    SamplingExhausted { attempts: usize },
    #[error("attack parameter file: {message}")]
    ParamsParse { message: String },
    #[error(transparent)]
    Engine(#[from] QcoreError),
}

/// When a hook fires during a round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HookPoint {
    /// The particle bound for Bob is on the wire.
    TransitToBob,
    /// The particle bound for Charlie is on the wire.
    TransitToCharlie,
    /// Both return particles are back with the dealer (reflected originals
    /// under CTRL, fresh qubits under SIFT).
    ReturnsCombined,
}

/// What a hook unitary acts on; the protocol resolves wires to whatever
/// subsystem is travelling at that moment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HookOperand {
    WireToBob,
    WireToCharlie,
    WireFromBob,
    WireFromCharlie,
    Probe(usize),
}

/// One unitary applied at a hook point; operand order fixes the tensor
/// order of the unitary's index space (first operand most significant).
#[derive(Clone, Debug)]
pub struct AttackHook {
    pub point: HookPoint,
    pub operands: Vec<HookOperand>,
    pub unitary: UnitaryMatrix,
}

/// A complete attack: probe registers (initialized to their ground state
/// at the start of every round), the hook unitaries, and whether the
/// attacker measures the probes computationally at the end of each round.
#[derive(Clone, Debug)]
pub struct AttackModel {
    pub descriptor: String,
    pub probes: Vec<(Label, usize)>,
    pub hooks: Vec<AttackHook>,
    pub measure_probes: bool,
}

impl AttackModel {
    pub fn hooks_at(&self, point: HookPoint) -> impl Iterator<Item = &AttackHook> {
        self.hooks.iter().filter(move |h| h.point == point)
    }

    pub fn probe_labels(&self) -> Vec<Label> {
        self.probes.iter().map(|(l, _)| l.clone()).collect()
    }
}

/// The honest-channel baseline: probes are carried but never touched.
pub fn identity_attack(probe_dim: usize) -> AttackModel {
    AttackModel {
        descriptor: "none".to_owned(),
        probes: vec![
            (Label::from("eb"), probe_dim.max(1)),
            (Label::from("ec"), probe_dim.max(1)),
        ],
        hooks: Vec::new(),
        measure_probes: false,
    }
}

/// Which outgoing wires an intercept-resend attack taps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InterceptTarget {
    ParticleToBob,
    ParticleToCharlie,
    Both,
}

/// Measure-and-resend in the computational basis, modeled unitarily as a
/// copy onto a two-dimensional probe (which dephases the wire qubit
/// exactly as a measurement would, and leaves the attacker a readable
/// record).
pub fn intercept_resend_z(target: InterceptTarget) -> AttackModel {
    let copy = UnitaryMatrix::permutation(&[0, 1, 3, 2]).expect("copy permutation is valid");
    let mut hooks = Vec::new();
    if matches!(target, InterceptTarget::ParticleToBob | InterceptTarget::Both) {
        hooks.push(AttackHook {
            point: HookPoint::TransitToBob,
            operands: vec![HookOperand::WireToBob, HookOperand::Probe(0)],
            unitary: copy.clone(),
        });
    }
    if matches!(target, InterceptTarget::ParticleToCharlie | InterceptTarget::Both) {
        hooks.push(AttackHook {
            point: HookPoint::TransitToCharlie,
            operands: vec![HookOperand::WireToCharlie, HookOperand::Probe(1)],
            unitary: copy,
        });
    }
    let name = match target {
        InterceptTarget::ParticleToBob => "intercept-resend:particle1",
        InterceptTarget::ParticleToCharlie => "intercept-resend:particle4",
        InterceptTarget::Both => "intercept-resend:both",
    };
    AttackModel {
        descriptor: name.to_owned(),
        probes: vec![(Label::from("eb"), 2), (Label::from("ec"), 2)],
        hooks,
        measure_probes: true,
    }
}

/// How the return-leg unitary of an entangle-measure attack is given.
#[derive(Clone, Debug)]
pub enum UfMode {
    /// Identity on the returning wires, with an optional joint unitary on
    /// the probes alone. This is the undetectable form.
    Compliant {
        probe_unitary: Option<UnitaryMatrix>,
    },
    /// An arbitrary unitary on (wire from Bob ⊗ wire from Charlie ⊗
    /// probe ⊗ probe) — or (wire ⊗ probe) in the single-wire participant
    /// variant.
    Explicit { matrix: UnitaryMatrix },
    /// Haar-random on the same joint space, drawn deterministically from
    /// the seed.
    Haar { seed: u64 },
}

/// Parameters of the entangle-measure family: the four amplitudes and
/// four probe states defining `U_E`, plus the return-leg mode.
#[derive(Clone, Debug)]
pub struct EntangleMeasureParams {
    pub probe_dim: usize,
    /// β00, β01, β10, β11.
    pub beta: [Complex64; 4],
    /// ξ00, ξ01, ξ10, ξ11, each of length `probe_dim`.
    pub xi: [Vec<Complex64>; 4],
    pub uf: UfMode,
}

impl EntangleMeasureParams {
    fn beta_at(&self, input: usize, output: usize) -> Complex64 {
        self.beta[input * 2 + output]
    }

    fn xi_at(&self, input: usize, output: usize) -> &[Complex64] {
        &self.xi[input * 2 + output]
    }

    /// Validates the normalization invariants and returns a copy with β
    /// rows and ξ vectors renormalized exactly.
    fn normalized(&self) -> Result<Self, AttackError> {
        if self.probe_dim == 0 {
            return Err(AttackError::ProbeDim {
                dim: 0,
                min: 1,
            });
        }
        let names = ["xi00", "xi01", "xi10", "xi11"];
        let mut out = self.clone();
        for (i, name) in names.iter().enumerate() {
            if self.xi[i].len() != self.probe_dim {
                return Err(AttackError::VectorLength {
                    name: names[i],
                    expected: self.probe_dim,
                    actual: self.xi[i].len(),
                });
            }
            let norm = self.xi[i].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > PARAM_NORM_TOL {
                return Err(AttackError::NotNormalized {
                    name: (*name).to_owned(),
                    norm,
                });
            }
            for c in &mut out.xi[i] {
                *c /= norm;
            }
        }
        for input in 0..2 {
            let norm = (self.beta_at(input, 0).norm_sqr() + self.beta_at(input, 1).norm_sqr())
                .sqrt();
            if (norm - 1.0).abs() > PARAM_NORM_TOL {
                return Err(AttackError::NotNormalized {
                    name: format!("beta row {input}"),
                    norm,
                });
            }
            out.beta[input * 2] /= norm;
            out.beta[input * 2 + 1] /= norm;
        }
        Ok(out)
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn vec_norm(a: &[Complex64]) -> f64 {
    a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Builds `U_E` on (wire ⊗ probe) from validated params: the two columns
/// for probe ground input are fixed by (β, ξ); the rest are a
/// deterministic orthonormal completion over canonical candidates.
fn build_wire_unitary(params: &EntangleMeasureParams) -> Result<UnitaryMatrix, AttackError> {
    let d = params.probe_dim;
    let n = 2 * d;
    let mut specified: Vec<Vec<Complex64>> = Vec::with_capacity(2);
    for input in 0..2 {
        let mut col = vec![Complex64::ZERO; n];
        for output in 0..2 {
            let b = params.beta_at(input, output);
            for (j, &x) in params.xi_at(input, output).iter().enumerate() {
                col[output * d + j] += b * x;
            }
        }
        specified.push(col);
    }
    let overlap = dot(&specified[0], &specified[1]).norm();
    if overlap > EXTENSION_TOL {
        return Err(AttackError::NotExtensible { overlap });
    }

    // Gram-Schmidt completion over canonical basis vectors, then a second
    // orthogonalization sweep for machine-precision unitarity.
    let mut cols = specified;
    'fill: for pass_threshold in [0.5, 1e-8] {
        for j in 0..n {
            if cols.len() == n {
                break 'fill;
            }
            let mut v = vec![Complex64::ZERO; n];
            v[j] = Complex64::ONE;
            for c in &cols {
                let o = dot(c, &v);
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= o * ci;
                }
            }
            let norm = vec_norm(&v);
            if norm > pass_threshold {
                for vi in &mut v {
                    *vi /= norm;
                }
                cols.push(v);
            }
        }
    }
    debug_assert_eq!(cols.len(), n);
    for i in 0..n {
        for k in 0..i {
            let (head, tail) = cols.split_at_mut(i);
            let o = dot(&head[k], &tail[0]);
            for (vi, ci) in tail[0].iter_mut().zip(&head[k]) {
                *vi -= o * ci;
            }
        }
        let norm = vec_norm(&cols[i]);
        for vi in &mut cols[i] {
            *vi /= norm;
        }
    }

    // Column order: inputs |0,e0> and |1,e0> sit at indices 0 and d; the
    // completed columns fill the remaining indices in ascending order.
    let mut elems = vec![Complex64::ZERO; n * n];
    let mut col_indices = vec![0usize, d];
    col_indices.extend((0..n).filter(|j| *j != 0 && *j != d));
    for (c, &j) in cols.iter().zip(&col_indices) {
        for (i, &x) in c.iter().enumerate() {
            elems[i * n + j] = x;
        }
    }
    Ok(UnitaryMatrix::from_rows(n, elems)?)
}

fn return_hook(
    uf: &UfMode,
    probes: &[(Label, usize)],
    include_wires: &[HookOperand],
) -> Result<Option<AttackHook>, AttackError> {
    let probe_dim_product: usize = probes.iter().map(|(_, d)| d).product();
    let wire_dim_product: usize = 1 << include_wires.len();
    let probe_operands: Vec<HookOperand> =
        (0..probes.len()).map(HookOperand::Probe).collect();
    let full_operands: Vec<HookOperand> = include_wires
        .iter()
        .copied()
        .chain(probe_operands.iter().copied())
        .collect();
    match uf {
        UfMode::Compliant { probe_unitary: None } => Ok(None),
        UfMode::Compliant {
            probe_unitary: Some(w),
        } => {
            if w.dim() != probe_dim_product {
                return Err(AttackError::ReturnHookDim {
                    expected: probe_dim_product,
                    actual: w.dim(),
                });
            }
            Ok(Some(AttackHook {
                point: HookPoint::ReturnsCombined,
                operands: probe_operands,
                unitary: w.clone(),
            }))
        }
        UfMode::Explicit { matrix } => {
            let expected = wire_dim_product * probe_dim_product;
            if matrix.dim() != expected {
                return Err(AttackError::ReturnHookDim {
                    expected,
                    actual: matrix.dim(),
                });
            }
            Ok(Some(AttackHook {
                point: HookPoint::ReturnsCombined,
                operands: full_operands,
                unitary: matrix.clone(),
            }))
        }
        UfMode::Haar { seed } => {
            let expected = wire_dim_product * probe_dim_product;
            let mut rng = named_stream(*seed, "return-hook-haar");
            Ok(Some(AttackHook {
                point: HookPoint::ReturnsCombined,
                operands: full_operands,
                unitary: UnitaryMatrix::haar_random(expected, &mut rng),
            }))
        }
    }
}

/// Builds the two-wire entangle-measure attack: the same `U_E` acts on
/// (particle-to-Bob ⊗ probe B) and on (particle-to-Charlie ⊗ probe C);
/// the return leg follows `params.uf`.
pub fn build_entangle_measure(params: &EntangleMeasureParams) -> Result<AttackModel, AttackError> {
    let params = params.normalized()?;
    let ue = build_wire_unitary(&params)?;
    let probes = vec![
        (Label::from("eb"), params.probe_dim),
        (Label::from("ec"), params.probe_dim),
    ];
    let mut hooks = vec![
        AttackHook {
            point: HookPoint::TransitToBob,
            operands: vec![HookOperand::WireToBob, HookOperand::Probe(0)],
            unitary: ue.clone(),
        },
        AttackHook {
            point: HookPoint::TransitToCharlie,
            operands: vec![HookOperand::WireToCharlie, HookOperand::Probe(1)],
            unitary: ue,
        },
    ];
    if let Some(hook) = return_hook(
        &params.uf,
        &probes,
        &[HookOperand::WireFromBob, HookOperand::WireFromCharlie],
    )? {
        hooks.push(hook);
    }
    Ok(AttackModel {
        descriptor: "entangle-measure".to_owned(),
        probes,
        hooks,
        measure_probes: false,
    })
}

/// Parameters of the undetectable family: identity on the wire (β rows
/// are (1,0) and (0,1)) with every probe state equal to `v|0>`, plus an
/// optional probe-pair unitary on the return leg.
pub fn compliant_params(
    probe_dim: usize,
    v: &UnitaryMatrix,
    w: Option<&UnitaryMatrix>,
) -> Result<EntangleMeasureParams, AttackError> {
    if v.dim() != probe_dim {
        return Err(AttackError::ReturnHookDim {
            expected: probe_dim,
            actual: v.dim(),
        });
    }
    let v0: Vec<Complex64> = (0..probe_dim).map(|i| v.at(i, 0)).collect();
    Ok(EntangleMeasureParams {
        probe_dim,
        beta: [
            Complex64::ONE,
            Complex64::ZERO,
            Complex64::ZERO,
            Complex64::ONE,
        ],
        xi: [v0.clone(), v0.clone(), v0.clone(), v0],
        uf: UfMode::Compliant {
            probe_unitary: w.cloned(),
        },
    })
}

/// The undetectable attack `U_E = I ⊗ V`, `U_F = I ⊗ W`: it satisfies
/// every zero-error constraint exactly and leaks nothing.
pub fn compliant_attack(
    probe_dim: usize,
    v: &UnitaryMatrix,
    w: &UnitaryMatrix,
) -> Result<AttackModel, AttackError> {
    let params = compliant_params(probe_dim, v, Some(w))?;
    let mut model = build_entangle_measure(&params)?;
    model.descriptor = "compliant".to_owned();
    Ok(model)
}

/// Draws random parameters in the undetectable family: Haar `V` on one
/// probe for the transit leg and Haar `W` on the probe pair for the
/// return leg.
pub fn sample_compliant_params(
    probe_dim: usize,
    seed: u64,
) -> Result<EntangleMeasureParams, AttackError> {
    let v = UnitaryMatrix::haar_random(probe_dim, &mut named_stream(seed, "compliant-v"));
    let w = UnitaryMatrix::haar_random(
        probe_dim * probe_dim,
        &mut named_stream(seed, "compliant-w"),
    );
    compliant_params(probe_dim, &v, Some(&w))
}

/// Draws a random compliant attack: Haar `V` on one probe and Haar `W` on
/// the probe pair.
pub fn sample_compliant(probe_dim: usize, seed: u64) -> Result<AttackModel, AttackError> {
    let params = sample_compliant_params(probe_dim, seed)?;
    let mut model = build_entangle_measure(&params)?;
    model.descriptor = "compliant".to_owned();
    Ok(model)
}

/// Bob's insider variant: he attacks only the dealer↔Charlie wire with a
/// single probe, knowing his own round data. `params.uf` is interpreted
/// on the reduced space: Compliant → probe only, Explicit/Haar →
/// (returning Charlie wire ⊗ probe).
pub fn bob_participant_attack(params: &EntangleMeasureParams) -> Result<AttackModel, AttackError> {
    let params_n = params.normalized()?;
    let ue = build_wire_unitary(&params_n)?;
    let probes = vec![(Label::from("ep"), params_n.probe_dim)];
    let mut hooks = vec![AttackHook {
        point: HookPoint::TransitToCharlie,
        operands: vec![HookOperand::WireToCharlie, HookOperand::Probe(0)],
        unitary: ue,
    }];
    if let Some(hook) = return_hook(&params_n.uf, &probes, &[HookOperand::WireFromCharlie])? {
        hooks.push(hook);
    }
    Ok(AttackModel {
        descriptor: "bob-participant".to_owned(),
        probes,
        hooks,
        measure_probes: true,
    })
}

/// Draws a compliant-form insider attack for Bob with Haar probe
/// unitaries.
pub fn sample_bob_participant(probe_dim: usize, seed: u64) -> Result<AttackModel, AttackError> {
    let v = UnitaryMatrix::haar_random(probe_dim, &mut named_stream(seed, "participant-v"));
    let w = UnitaryMatrix::haar_random(probe_dim, &mut named_stream(seed, "participant-w"));
    let mut params = compliant_params(probe_dim, &v, None)?;
    params.uf = UfMode::Compliant {
        probe_unitary: Some(w),
    };
    bob_participant_attack(&params)
}

/// The sixteen probe-pair vectors indexed by the four-qubit outcome
/// `xyzw` (index = 8x + 4y + 2z + w), with the residuals of the
/// zero-error constraint system.
#[derive(Clone, Debug)]
pub struct ConstraintReport {
    /// Each vector lives in the probe-pair space, index = p·d + q.
    pub e_vectors: Vec<Vec<Complex64>>,
    /// Named residuals: "zero_set" is the largest norm among the eight
    /// vectors that must vanish; the four "pair_*" entries are norms of
    /// the signed pair mismatches.
    pub residuals: BTreeMap<String, f64>,
    pub max_residual: f64,
}

/// Outcome indices whose E-vector must vanish for zero detection.
const ZERO_SET: [usize; 8] = [
    0b0100, 0b0010, 0b0001, 0b0111, 0b1000, 0b1110, 0b1101, 0b1011,
];

/// Signed pairings among the surviving E-vectors: (i, j, sign) encodes
/// the requirement E_i = sign · E_j.
const PAIRINGS: [(usize, usize, f64, &str); 4] = [
    (0b0000, 0b0110, 1.0, "pair_0000_0110"),
    (0b0101, 0b0011, -1.0, "pair_0101_0011"),
    (0b1100, 0b1010, 1.0, "pair_1100_1010"),
    (0b1001, 0b1111, -1.0, "pair_1001_1111"),
];

/// Computes the sixteen E-vectors directly from (β, ξ) and scores the
/// constraint system. For outcome `x'yzw'`, the vector is
///
/// ```text
/// E_{x'yzw'} = Σ_{x,w} sgn(xyzw) β_{x x'} β_{w w'} ξ_{x x'} ⊗ ξ_{w w'}
/// ```
///
/// where `sgn(xyzw)` is the resource-state sign (±1 on its eight support
/// strings, 0 elsewhere) — the coefficient pattern produced by attacking
/// wires 1 and 4 of the resource state with the same `U_E`.
pub fn eval_zero_error_constraints(
    params: &EntangleMeasureParams,
) -> Result<ConstraintReport, AttackError> {
    let params = params.normalized()?;
    let d = params.probe_dim;
    let chi = chi00_amplitudes();
    let unit = std::f64::consts::SQRT_2 / 4.0;

    let mut e_vectors = Vec::with_capacity(16);
    for target in 0..16usize {
        let (xp, y, z, wp) = (target >> 3 & 1, target >> 2 & 1, target >> 1 & 1, target & 1);
        let mut e = vec![Complex64::ZERO; d * d];
        for x in 0..2usize {
            for w in 0..2usize {
                let amp = chi[(x << 3) | (y << 2) | (z << 1) | w];
                if amp.norm() == 0.0 {
                    continue;
                }
                let sign = amp.re / unit;
                let coef = Complex64::new(sign, 0.0)
                    * params.beta_at(x, xp)
                    * params.beta_at(w, wp);
                if coef.norm() == 0.0 {
                    continue;
                }
                let xa = params.xi_at(x, xp);
                let xb = params.xi_at(w, wp);
                for p in 0..d {
                    for q in 0..d {
                        e[p * d + q] += coef * xa[p] * xb[q];
                    }
                }
            }
        }
        e_vectors.push(e);
    }

    let mut residuals = BTreeMap::new();
    let zero_max = ZERO_SET
        .iter()
        .map(|&i| vec_norm(&e_vectors[i]))
        .fold(0.0f64, f64::max);
    residuals.insert("zero_set".to_owned(), zero_max);
    for (i, j, sign, name) in PAIRINGS {
        let diff: Vec<Complex64> = e_vectors[i]
            .iter()
            .zip(&e_vectors[j])
            .map(|(a, b)| a - Complex64::new(sign, 0.0) * b)
            .collect();
        residuals.insert(name.to_owned(), vec_norm(&diff));
    }
    let max_residual = residuals.values().copied().fold(0.0f64, f64::max);
    Ok(ConstraintReport {
        e_vectors,
        residuals,
        max_residual,
    })
}

/// Rejection-samples entangle-measure parameters that are far from the
/// zero-error family (`max_residual > min_residual`) yet still build a
/// valid unitary: the ξ pairs entering the extension condition are drawn
/// as orthogonal columns of Haar unitaries, making the condition hold
/// exactly, while β rows are uniform on the complex unit sphere. The
/// return leg is Haar on (both wires ⊗ both probes).
pub fn sample_noncompliant(
    probe_dim: usize,
    seed: u64,
    min_residual: f64,
) -> Result<EntangleMeasureParams, AttackError> {
    if probe_dim < 2 {
        return Err(AttackError::ProbeDim {
            dim: probe_dim,
            min: 2,
        });
    }
    const MAX_ATTEMPTS: usize = 64;
    for attempt in 0..MAX_ATTEMPTS {
        let label = format!("noncompliant-{attempt}");
        let mut rng = named_stream(seed, &label);
        let mut beta = [Complex64::ZERO; 4];
        for input in 0..2 {
            let raw: Vec<Complex64> = (0..2)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let norm = vec_norm(&raw);
            beta[input * 2] = raw[0] / norm;
            beta[input * 2 + 1] = raw[1] / norm;
        }
        let col = |u: &UnitaryMatrix, j: usize| -> Vec<Complex64> {
            (0..u.dim()).map(|i| u.at(i, j)).collect()
        };
        let va = UnitaryMatrix::haar_random(probe_dim, &mut rng);
        let vb = UnitaryMatrix::haar_random(probe_dim, &mut rng);
        let params = EntangleMeasureParams {
            probe_dim,
            beta,
            // The extension condition pairs (xi00, xi10) and (xi01, xi11);
            // drawing each pair as orthogonal columns zeroes both terms.
            xi: [col(&va, 0), col(&vb, 0), col(&va, 1), col(&vb, 1)],
            uf: UfMode::Haar { seed: seed ^ 0x5eed_0f_u64.wrapping_add(attempt as u64) },
        };
        let report = eval_zero_error_constraints(&params)?;
        if report.max_residual > min_residual {
            return Ok(params);
        }
    }
    Err(AttackError::SamplingExhausted {
        attempts: MAX_ATTEMPTS,
    })
}

// ---------------------------------------------------------------------------
// Attack parameter files
// ---------------------------------------------------------------------------

mod file_format {
    use serde::Deserialize;

    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct ParamsFile {
        pub probe_dim: usize,
        /// β00, β01, β10, β11, each as [re, im].
        pub beta: [[f64; 2]; 4],
        pub xi00: Vec<[f64; 2]>,
        pub xi01: Vec<[f64; 2]>,
        pub xi10: Vec<[f64; 2]>,
        pub xi11: Vec<[f64; 2]>,
        pub uf: Option<UfSection>,
    }

    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct UfSection {
        /// "compliant", "explicit-matrix", or "haar-random".
        pub mode: String,
        pub seed: Option<u64>,
        /// Row-major complex matrix, entries as [re, im].
        pub matrix: Option<Vec<Vec<[f64; 2]>>>,
    }
}

fn complex_rows(raw: &[Vec<[f64; 2]>]) -> Result<(usize, Vec<Complex64>), AttackError> {
    let dim = raw.len();
    let mut elems = Vec::with_capacity(dim * dim);
    for row in raw {
        if row.len() != dim {
            return Err(AttackError::ParamsParse {
                message: format!("uf.matrix row has {} entries, expected {}", row.len(), dim),
            });
        }
        elems.extend(row.iter().map(|&[re, im]| Complex64::new(re, im)));
    }
    Ok((dim, elems))
}

/// Parses the documented attack parameter file format (TOML): `probe_dim`,
/// `beta` (four [re, im] pairs), `xi00`..`xi11` (probe_dim [re, im] pairs
/// each), and an optional `[uf]` table with `mode` ∈ {"compliant",
/// "explicit-matrix", "haar-random"} plus `matrix` / `seed` as required.
pub fn params_from_toml(text: &str) -> Result<EntangleMeasureParams, AttackError> {
    let file: file_format::ParamsFile =
        toml::from_str(text).map_err(|e| AttackError::ParamsParse {
            message: e.to_string(),
        })?;
    let cvec = |raw: &[[f64; 2]]| -> Vec<Complex64> {
        raw.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
    };
    let uf = match &file.uf {
        None => UfMode::Compliant {
            probe_unitary: None,
        },
        Some(section) => match section.mode.as_str() {
            "compliant" => match &section.matrix {
                None => UfMode::Compliant {
                    probe_unitary: None,
                },
                Some(raw) => {
                    let (dim, elems) = complex_rows(raw)?;
                    UfMode::Compliant {
                        probe_unitary: Some(UnitaryMatrix::from_rows(dim, elems)?),
                    }
                }
            },
            "explicit-matrix" => {
                let raw = section.matrix.as_ref().ok_or_else(|| AttackError::ParamsParse {
                    message: "uf.mode = \"explicit-matrix\" requires uf.matrix".to_owned(),
                })?;
                let (dim, elems) = complex_rows(raw)?;
                UfMode::Explicit {
                    matrix: UnitaryMatrix::from_rows(dim, elems)?,
                }
            }
            "haar-random" => {
                let seed = section.seed.ok_or_else(|| AttackError::ParamsParse {
                    message: "uf.mode = \"haar-random\" requires uf.seed".to_owned(),
                })?;
                UfMode::Haar { seed }
            }
            other => {
                return Err(AttackError::ParamsParse {
                    message: format!(
                        "unknown uf.mode `{other}` (expected compliant, explicit-matrix, \
                         or haar-random)"
                    ),
                })
            }
        },
    };
    Ok(EntangleMeasureParams {
        probe_dim: file.probe_dim,
        beta: [
            Complex64::new(file.beta[0][0], file.beta[0][1]),
            Complex64::new(file.beta[1][0], file.beta[1][1]),
            Complex64::new(file.beta[2][0], file.beta[2][1]),
            Complex64::new(file.beta[3][0], file.beta[3][1]),
        ],
        xi: [
            cvec(&file.xi00),
            cvec(&file.xi01),
            cvec(&file.xi10),
            cvec(&file.xi11),
        ],
        uf,
    })
}
