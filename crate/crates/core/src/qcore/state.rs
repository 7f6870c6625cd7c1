//! Labeled-subsystem statevectors and unitary application.

use num_complex::Complex64;

use super::{QcoreError, UnitaryMatrix, NORM_TOL};

/// Identifies one subsystem of a composite state ("s1", "fb", "eb", ...).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(String);

impl Label {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

/// A pure state over an ordered list of labeled subsystems.
///
/// Amplitudes are dense in mixed-radix order: the first subsystem is the
/// most significant digit. All mutating operations preserve the norm to
/// numerical precision.
#[derive(Clone, Debug)]
pub struct Statevector {
    subsystems: Vec<(Label, usize)>,
    amps: Vec<Complex64>,
}

fn validate_subsystems(subsystems: &[(Label, usize)]) -> Result<usize, QcoreError> {
    if subsystems.is_empty() {
        return Err(QcoreError::EmptySystem);
    }
    let mut dim = 1usize;
    for (i, (label, d)) in subsystems.iter().enumerate() {
        if *d == 0 {
            return Err(QcoreError::InvalidDimension {
                label: label.to_string(),
                dim: *d,
            });
        }
        if subsystems[..i].iter().any(|(other, _)| other == label) {
            return Err(QcoreError::DuplicateLabel {
                label: label.to_string(),
            });
        }
        dim *= d;
    }
    Ok(dim)
}

impl Statevector {
    /// The basis state with every subsystem in the given digit.
    pub fn basis(subsystems: Vec<(Label, usize)>, digits: &[usize]) -> Result<Self, QcoreError> {
        let dim = validate_subsystems(&subsystems)?;
        if digits.len() != subsystems.len() {
            return Err(QcoreError::AmplitudeCount {
                expected: subsystems.len(),
                actual: digits.len(),
            });
        }
        for ((label, d), &digit) in subsystems.iter().zip(digits) {
            if digit >= *d {
                return Err(QcoreError::InvalidDimension {
                    label: label.to_string(),
                    dim: digit,
                });
            }
        }
        let mut amps = vec![Complex64::ZERO; dim];
        let mut index = 0usize;
        for ((_, d), &digit) in subsystems.iter().zip(digits) {
            index = index * d + digit;
        }
        amps[index] = Complex64::ONE;
        Ok(Self { subsystems, amps })
    }

    /// All subsystems in their `|0>` state.
    pub fn ground(subsystems: Vec<(Label, usize)>) -> Result<Self, QcoreError> {
        let digits = vec![0usize; subsystems.len()];
        Self::basis(subsystems, &digits)
    }

    /// Builds from explicit amplitudes; the vector must be normalized to
    /// within [`NORM_TOL`] and is then renormalized exactly.
    pub fn from_amplitudes(
        subsystems: Vec<(Label, usize)>,
        amps: Vec<Complex64>,
    ) -> Result<Self, QcoreError> {
        let dim = validate_subsystems(&subsystems)?;
        if amps.len() != dim {
            return Err(QcoreError::AmplitudeCount {
                expected: dim,
                actual: amps.len(),
            });
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QcoreError::NotNormalized { norm });
        }
        let mut state = Self { subsystems, amps };
        state.rescale(1.0 / norm);
        Ok(state)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn subsystems(&self) -> &[(Label, usize)] {
        &self.subsystems
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn position(&self, label: &Label) -> Result<usize, QcoreError> {
        self.subsystems
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| QcoreError::UnknownLabel {
                label: label.to_string(),
            })
    }

    pub fn dim_of(&self, label: &Label) -> Result<usize, QcoreError> {
        Ok(self.subsystems[self.position(label)?].1)
    }

    /// Stride of the subsystem at `pos`: product of all dimensions to its
    /// right.
    fn stride(&self, pos: usize) -> usize {
        self.subsystems[pos + 1..].iter().map(|(_, d)| d).product()
    }

    /// Flat index of a full digit assignment (one digit per subsystem).
    pub fn index_of(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.subsystems.len());
        let mut index = 0usize;
        for ((_, d), &digit) in self.subsystems.iter().zip(digits) {
            debug_assert!(digit < *d);
            index = index * d + digit;
        }
        index
    }

    /// Digit assignment of a flat index, most significant first.
    pub fn digits_of(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0usize; self.subsystems.len()];
        for (slot, (_, d)) in digits.iter_mut().zip(&self.subsystems).rev() {
            *slot = index % d;
            index /= d;
        }
        digits
    }

    /// Tensor product, `self` on the more significant side.
    pub fn tensor(&self, other: &Self) -> Result<Self, QcoreError> {
        let mut subsystems = self.subsystems.clone();
        for (label, d) in &other.subsystems {
            if subsystems.iter().any(|(l, _)| l == label) {
                return Err(QcoreError::DuplicateLabel {
                    label: label.to_string(),
                });
            }
            subsystems.push((label.clone(), *d));
        }
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(Self { subsystems, amps })
    }

    /// Applies `u` to the listed target subsystems; the first target is the
    /// most significant index of `u`'s space. Targets need not be adjacent.
    pub fn apply_unitary(
        &mut self,
        u: &UnitaryMatrix,
        targets: &[Label],
    ) -> Result<(), QcoreError> {
        let layout = TargetLayout::new(self, targets)?;
        if u.dim() != layout.target_dim {
            return Err(QcoreError::OperatorDimension {
                operator: u.dim(),
                target: layout.target_dim,
            });
        }
        let td = layout.target_dim;
        let mut scratch = vec![Complex64::ZERO; td];
        for &base in &layout.rest_bases {
            for (j, slot) in scratch.iter_mut().enumerate() {
                *slot = self.amps[base + layout.offsets[j]];
            }
            for i in 0..td {
                let mut acc = Complex64::ZERO;
                for (j, &v) in scratch.iter().enumerate() {
                    acc += u.at(i, j) * v;
                }
                self.amps[base + layout.offsets[i]] = acc;
            }
        }
        Ok(())
    }

    /// `<self|other>`; both states must share the exact subsystem layout.
    pub fn inner(&self, other: &Self) -> Result<Complex64, QcoreError> {
        if self.subsystems != other.subsystems {
            return Err(QcoreError::LayoutMismatch);
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|<self|other>|`, insensitive to global phase.
    pub fn fidelity(&self, other: &Self) -> Result<f64, QcoreError> {
        Ok(self.inner(other)?.norm())
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub(crate) fn rescale(&mut self, factor: f64) {
        for a in &mut self.amps {
            *a *= factor;
        }
    }
}

/// Index bookkeeping shared by unitary application, measurement, and
/// partial traces: flat offsets for each target-space basis combination,
/// plus the base index of every assignment of the remaining subsystems.
pub(crate) struct TargetLayout {
    pub target_dim: usize,
    pub offsets: Vec<usize>,
    pub rest_bases: Vec<usize>,
}

impl TargetLayout {
    pub fn new(state: &Statevector, targets: &[Label]) -> Result<Self, QcoreError> {
        let mut positions = Vec::with_capacity(targets.len());
        for (i, label) in targets.iter().enumerate() {
            let pos = state.position(label)?;
            if targets[..i].contains(label) {
                return Err(QcoreError::RepeatedTarget {
                    label: label.to_string(),
                });
            }
            positions.push(pos);
        }
        let dims: Vec<usize> = positions.iter().map(|&p| state.subsystems[p].1).collect();
        let strides: Vec<usize> = positions.iter().map(|&p| state.stride(p)).collect();
        let target_dim: usize = dims.iter().product();

        let mut offsets = Vec::with_capacity(target_dim);
        for mut j in 0..target_dim {
            let mut offset = 0usize;
            for (&d, &s) in dims.iter().zip(&strides).rev() {
                offset += (j % d) * s;
                j /= d;
            }
            offsets.push(offset);
        }

        let mut rest_bases = Vec::with_capacity(state.dim() / target_dim);
        'outer: for g in 0..state.dim() {
            for (&d, &s) in dims.iter().zip(&strides) {
                if (g / s) % d != 0 {
                    continue 'outer;
                }
            }
            rest_bases.push(g);
        }
        Ok(Self {
            target_dim,
            offsets,
            rest_bases,
        })
    }
}
