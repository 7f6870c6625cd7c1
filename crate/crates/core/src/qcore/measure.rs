//! Projective measurement in arbitrary orthonormal bases.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

use super::state::TargetLayout;
use super::{Label, QcoreError, Statevector, PROB_FLOOR, UNITARY_TOL};

/// A complete orthonormal measurement basis on a `dim`-dimensional target
/// space, given as kets (rank-1 projectors). Completeness and
/// orthonormality are enforced at construction, so Born probabilities
/// always sum to one.
#[derive(Clone, Debug)]
pub struct ProjectorSet {
    dim: usize,
    names: Vec<String>,
    kets: Vec<Vec<Complex64>>,
}

impl ProjectorSet {
    pub fn new(names: Vec<String>, kets: Vec<Vec<Complex64>>) -> Result<Self, QcoreError> {
        if kets.is_empty() {
            return Err(QcoreError::EmptySystem);
        }
        let dim = kets[0].len();
        if kets.len() != dim || names.len() != dim {
            return Err(QcoreError::BasisIncomplete {
                dim,
                count: kets.len().min(names.len()),
            });
        }
        for ket in &kets {
            if ket.len() != dim {
                return Err(QcoreError::AmplitudeCount {
                    expected: dim,
                    actual: ket.len(),
                });
            }
        }
        let mut max_dev = 0.0f64;
        for (i, a) in kets.iter().enumerate() {
            for (j, b) in kets.iter().enumerate() {
                let dot: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                let expect = if i == j { Complex64::ONE } else { Complex64::ZERO };
                max_dev = max_dev.max((dot - expect).norm());
            }
        }
        if max_dev > UNITARY_TOL {
            return Err(QcoreError::BasisNotOrthonormal { max_deviation: max_dev });
        }
        Ok(Self { dim, names, kets })
    }

    /// The computational basis with outcomes named "0", "1", ...
    pub fn computational(dim: usize) -> Self {
        let mut kets = Vec::with_capacity(dim);
        let mut names = Vec::with_capacity(dim);
        for k in 0..dim {
            let mut ket = vec![Complex64::ZERO; dim];
            ket[k] = Complex64::ONE;
            kets.push(ket);
            names.push(k.to_string());
        }
        Self { dim, names, kets }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn ket(&self, index: usize) -> &[Complex64] {
        &self.kets[index]
    }
}

/// One sampled measurement result.
#[derive(Clone, Debug)]
pub struct MeasureOutcome {
    pub index: usize,
    pub name: String,
    pub probability: f64,
}

impl Statevector {
    /// Born probabilities of each basis outcome on the target subsystems,
    /// without disturbing the state.
    pub fn outcome_probabilities(
        &self,
        targets: &[Label],
        basis: &ProjectorSet,
    ) -> Result<Vec<f64>, QcoreError> {
        let layout = TargetLayout::new(self, targets)?;
        if basis.dim() != layout.target_dim {
            return Err(QcoreError::OperatorDimension {
                operator: basis.dim(),
                target: layout.target_dim,
            });
        }
        let td = layout.target_dim;
        let mut probs = vec![0.0f64; td];
        let mut block = vec![Complex64::ZERO; td];
        for &base in &layout.rest_bases {
            for (j, slot) in block.iter_mut().enumerate() {
                *slot = self.amplitudes()[base + layout.offsets[j]];
            }
            for (k, p) in probs.iter_mut().enumerate() {
                let ket = basis.ket(k);
                let c: Complex64 = ket.iter().zip(&block).map(|(x, v)| x.conj() * v).sum();
                *p += c.norm_sqr();
            }
        }
        Ok(probs)
    }

    /// Projects onto the given outcome and renormalizes; returns the
    /// pre-collapse probability of that outcome.
    pub fn collapse_onto(
        &mut self,
        targets: &[Label],
        basis: &ProjectorSet,
        outcome: usize,
    ) -> Result<f64, QcoreError> {
        let layout = TargetLayout::new(self, targets)?;
        if basis.dim() != layout.target_dim {
            return Err(QcoreError::OperatorDimension {
                operator: basis.dim(),
                target: layout.target_dim,
            });
        }
        if outcome >= basis.dim() {
            return Err(QcoreError::UnknownOutcome {
                index: outcome,
                count: basis.dim(),
            });
        }
        let td = layout.target_dim;
        let ket = basis.ket(outcome);
        let mut overlaps = Vec::with_capacity(layout.rest_bases.len());
        let mut probability = 0.0f64;
        let mut block = vec![Complex64::ZERO; td];
        for &base in &layout.rest_bases {
            for (j, slot) in block.iter_mut().enumerate() {
                *slot = self.amplitudes()[base + layout.offsets[j]];
            }
            let c: Complex64 = ket.iter().zip(&block).map(|(x, v)| x.conj() * v).sum();
            probability += c.norm_sqr();
            overlaps.push(c);
        }
        if probability < PROB_FLOOR {
            return Err(QcoreError::ZeroProbabilityBranch {
                outcome: basis.name(outcome).to_owned(),
                probability,
            });
        }
        let scale = 1.0 / probability.sqrt();
        for (&base, &c) in layout.rest_bases.iter().zip(&overlaps) {
            for (j, &k) in ket.iter().enumerate() {
                self.amplitudes_mut()[base + layout.offsets[j]] = k * c * scale;
            }
        }
        Ok(probability)
    }

    /// Samples an outcome by the Born rule and collapses onto it.
    pub fn measure(
        &mut self,
        targets: &[Label],
        basis: &ProjectorSet,
        rng: &mut ChaCha12Rng,
    ) -> Result<MeasureOutcome, QcoreError> {
        let probs = self.outcome_probabilities(targets, basis)?;
        let total: f64 = probs.iter().sum();
        let draw: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0f64;
        let mut chosen = probs.len() - 1;
        for (k, &p) in probs.iter().enumerate() {
            acc += p;
            if draw < acc {
                chosen = k;
                break;
            }
        }
        let probability = self.collapse_onto(targets, basis, chosen)?;
        Ok(MeasureOutcome {
            index: chosen,
            name: basis.name(chosen).to_owned(),
            probability,
        })
    }
}
