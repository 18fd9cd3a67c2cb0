//! Exact verification of cubic-discriminant structures on an 8-dimensional
//! quaternion-Hermitian vector space.
//!
//! The crate is organised bottom-up:
//!
//! * [`scalars`]: the field ℚ(i, √3) and a floating-point shadow backend.
//! * [`linalg`]: dense matrices with exact elimination (rank, kernels, inverses).
//! * [`tensor_core`]: typed index tensors on W ⊕ W̄, the structure tensors π, g, J_s, and the 𝔧-map.
//! * [`sp2_lie`]: sp(2) as symmetric 4×4 matrices, its bracket, inner product and the † operator.
//! * [`hk_curvature`]: quartics, hyper-Kähler curvature-type tensors, 𝒦, T_K and the tangent operator.
//! * [`irrep_so4`]: the irreducible sp(1) on S³Δ, the Υ-matrices, Ŝ, ℰ-frames, Casimir decompositions.
//! * [`orbit`]: membership in the orbit 𝒞, stabilizers, Cayley transport, reconstruction from frames.
//! * [`model_spaces`]: constant-coefficient coframes, Lie tables, curvature of the model spaces,
//!   and the first-Bianchi system.
//! * [`reports`]: verification suites, JSON import/export and report rendering for the `verify` CLI.
//!
//! All routines are generic over [`Scalar`]; choose [`Exact`] for proofs and
//! [`Float`] for a cross-check.

pub mod hk_curvature;
pub mod irrep_so4;
pub mod linalg;
pub mod model_spaces;
pub mod orbit;
pub mod reports;
pub mod scalars;
pub mod sp2_lie;
pub mod tensor_core;

pub use scalars::{Exact, Float, Residual, Scalar};

/// Errors raised by library operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("illegal contraction between slot {0} ({1}) and slot {2} ({3})")]
    IllegalContraction(usize, String, usize, String),
    #[error("malformed index operation: {0}")]
    Index(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("singular matrix")]
    Singular,
    #[error("inconsistent linear system: {0}")]
    Inconsistent(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
