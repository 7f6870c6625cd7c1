//! Square complex matrices validated as unitary, plus Haar sampling.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{QcoreError, UNITARY_TOL};

/// A dense `dim x dim` unitary, stored row-major.
///
/// Construction through [`UnitaryMatrix::from_rows`] enforces unitarity to
/// [`UNITARY_TOL`]; products, adjoints, and Kronecker products of valid
/// unitaries are built without re-checking.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    dim: usize,
    elems: Vec<Complex64>,
}

impl UnitaryMatrix {
    /// Builds from row-major data after verifying `U U† = I`.
    pub fn from_rows(dim: usize, elems: Vec<Complex64>) -> Result<Self, QcoreError> {
        if elems.len() != dim * dim {
            return Err(QcoreError::MatrixShape {
                dim,
                actual: elems.len(),
            });
        }
        let u = Self { dim, elems };
        let dev = u.max_nonunitarity();
        if dev > UNITARY_TOL {
            return Err(QcoreError::NotUnitary { max_deviation: dev });
        }
        Ok(u)
    }

    /// Internal constructor for matrices unitary by construction.
    pub(crate) fn from_rows_trusted(dim: usize, elems: Vec<Complex64>) -> Self {
        debug_assert_eq!(elems.len(), dim * dim);
        Self { dim, elems }
    }

    pub fn identity(dim: usize) -> Self {
        let mut elems = vec![Complex64::ZERO; dim * dim];
        for i in 0..dim {
            elems[i * dim + i] = Complex64::ONE;
        }
        Self { dim, elems }
    }

    /// The permutation unitary mapping basis state `|j>` to `|perm[j]>`.
    pub fn permutation(perm: &[usize]) -> Result<Self, QcoreError> {
        let dim = perm.len();
        let mut seen = vec![false; dim];
        for &p in perm {
            if p >= dim || seen[p] {
                return Err(QcoreError::NotPermutation { len: dim });
            }
            seen[p] = true;
        }
        let mut elems = vec![Complex64::ZERO; dim * dim];
        for (j, &p) in perm.iter().enumerate() {
            elems[p * dim + j] = Complex64::ONE;
        }
        Ok(Self { dim, elems })
    }

    /// A Haar-distributed random unitary: QR of a Ginibre matrix with the
    /// R-diagonal phases folded back into Q.
    pub fn haar_random(dim: usize, rng: &mut ChaCha12Rng) -> Self {
        let normal = StandardNormal;
        let ginibre = DMatrix::from_fn(dim, dim, |_, _| {
            let re: f64 = normal.sample(rng);
            let im: f64 = normal.sample(rng);
            Complex64::new(re, im) / 2f64.sqrt()
        });
        let qr = ginibre.qr();
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..dim {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::ONE };
            for i in 0..dim {
                q[(i, j)] *= phase;
            }
        }
        let elems = (0..dim * dim)
            .map(|k| q[(k / dim, k % dim)])
            .collect();
        Self { dim, elems }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.elems[row * self.dim + col]
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &Self) -> Result<Self, QcoreError> {
        if self.dim != other.dim {
            return Err(QcoreError::OperatorDimension {
                operator: other.dim,
                target: self.dim,
            });
        }
        let n = self.dim;
        let mut elems = vec![Complex64::ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.elems[i * n + k];
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    elems[i * n + j] += a * other.elems[k * n + j];
                }
            }
        }
        Ok(Self { dim: n, elems })
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let n = self.dim;
        let mut elems = vec![Complex64::ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                elems[j * n + i] = self.elems[i * n + j].conj();
            }
        }
        Self { dim: n, elems }
    }

    /// Kronecker product; `self` indexes the more significant factor.
    pub fn kron(&self, other: &Self) -> Self {
        let (a, b) = (self.dim, other.dim);
        let n = a * b;
        let mut elems = vec![Complex64::ZERO; n * n];
        for i1 in 0..a {
            for j1 in 0..a {
                let f = self.elems[i1 * a + j1];
                if f == Complex64::ZERO {
                    continue;
                }
                for i2 in 0..b {
                    for j2 in 0..b {
                        elems[(i1 * b + i2) * n + (j1 * b + j2)] = f * other.elems[i2 * b + j2];
                    }
                }
            }
        }
        Self { dim: n, elems }
    }

    /// Largest absolute entry of `U† U − I`.
    pub fn max_nonunitarity(&self) -> f64 {
        let n = self.dim;
        let mut max = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut dot = Complex64::ZERO;
                for k in 0..n {
                    // (U† U)_{ij} = sum_k conj(U_{ki}) U_{kj}
                    dot += self.elems[k * n + i].conj() * self.elems[k * n + j];
                }
                let expect = if i == j { Complex64::ONE } else { Complex64::ZERO };
                max = max.max((dot - expect).norm());
            }
        }
        max
    }
}
