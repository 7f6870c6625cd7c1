//! Dense statevector engine.
//!
//! States live on an ordered list of labeled subsystems of arbitrary
//! dimension (qubits, probe registers, ...). Amplitudes are stored as a
//! single dense vector in mixed-radix order with the leftmost subsystem
//! most significant. Unitaries and projective measurements address
//! subsystems by label, so callers never track raw index arithmetic.

mod measure;
mod rng;
mod state;
mod unitary;

pub use measure::{MeasureOutcome, ProjectorSet};
pub use rng::named_stream;
pub use state::{Label, Statevector};
pub use unitary::UnitaryMatrix;

pub(crate) use state::TargetLayout;

use thiserror::Error;

/// Tolerance for unitarity and basis-orthonormality checks.
pub const UNITARY_TOL: f64 = 1e-9;

/// Slack allowed on the norm of externally supplied vectors before they
/// are rejected; accepted vectors are renormalized exactly.
pub const NORM_TOL: f64 = 1e-6;

/// Probabilities below this floor are treated as impossible branches.
pub const PROB_FLOOR: f64 = 1e-12;

/// Errors raised by statevector construction, evolution, and measurement.
#[derive(Debug, Error)]
pub enum QcoreError {
    #[error("state must contain at least one subsystem")]
    EmptySystem,
    #[error("subsystem `{label}` has invalid dimension {dim}")]
    InvalidDimension { label: String, dim: usize },
    #[error("duplicate subsystem label `{label}`")]
    DuplicateLabel { label: String },
    #[error("no subsystem labeled `{label}`")]
    UnknownLabel { label: String },
    #[error("subsystem `{label}` addressed more than once in one operation")]
    RepeatedTarget { label: String },
    #[error("expected {expected} amplitudes, got {actual}")]
    AmplitudeCount { expected: usize, actual: usize },
    #[error("vector norm {norm} deviates from 1 beyond tolerance")]
    NotNormalized { norm: f64 },
    #[error("matrix is not unitary (max deviation {max_deviation:.3e})")]
    NotUnitary { max_deviation: f64 },
    #[error("operator dimension {operator} does not match target dimension {target}")]
    OperatorDimension { operator: usize, target: usize },
    #[error("matrix data length {actual} does not match dimension {dim}x{dim}")]
    MatrixShape { dim: usize, actual: usize },
    #[error("sequence of length {len} is not a permutation of 0..{len}")]
    NotPermutation { len: usize },
    #[error("projector set over dimension {dim} needs {dim} kets, got {count}")]
    BasisIncomplete { dim: usize, count: usize },
    #[error("projector kets are not orthonormal (max deviation {max_deviation:.3e})")]
    BasisNotOrthonormal { max_deviation: f64 },
    #[error("projector set has no outcome index {index} (size {count})")]
    UnknownOutcome { index: usize, count: usize },
    #[error("collapse onto outcome `{outcome}` has probability {probability:.3e} below floor")]
    ZeroProbabilityBranch { outcome: String, probability: f64 },
    #[error("states have different subsystem layouts")]
    LayoutMismatch,
}
