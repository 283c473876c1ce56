//! Exact semiclassical Hodge theory for Poisson and quantum tori.
//!
//! Everything here is computed in exact arithmetic over the scalar tower
//! ℚ ⊂ ℚ[τ, τ⁻¹] ⊂ Frac(ℚ[τ]), where τ is the formal period 2πi.  No
//! floating point appears anywhere in the library.
//!
//! The modules, bottom up:
//!
//! * [`scalars`] — rationals, Laurent polynomials in τ, their fraction
//!   field, and the exponential-value group `Exp(λ)` modulo τℤ.
//! * [`linalg`] — exact linear algebra: Smith normal form over ℤ and
//!   reduced row echelon form over the fraction field.
//! * [`exterior`] — logarithmic differential forms on a torus, invariant
//!   polyvectors, contraction, the de Rham differential, the Poisson
//!   codifferential δ_σ = [d, ι_σ], and u-periodic forms.
//! * [`mhs`] — finitely generated abelian groups, mixed Hodge structures
//!   with exact comparison data, validation, Tate twists, and Carlson's
//!   extension-class calculus in Jacobian quotients.
//! * [`toric`] — the Poisson–Hodge flag of a constant Poisson structure
//!   on a torus, the associated K-theory mixed Hodge structures, quantum
//!   parameters, and the Torelli comparison.
//! * [`qtorus`] — quantum tori: the twisted group algebra, its mixed
//!   complex, the HKR pairing, the centre at roots of unity, Gauss–Manin
//!   transport of the K-lattice, and the extension class of the
//!   semiclassical weight sequence.
//! * [`gysin`] — graded K-theory of a quantum projective plane or
//!   three-space from Gysin pushforward data.
//! * [`series`] — truncated power series over a symbolic coefficient
//!   ring and the quantum parameter of a Maurer–Cartan series.

pub mod scalars;
pub mod linalg;
pub mod exterior;
pub mod mhs;
pub mod toric;
pub mod qtorus;
pub mod gysin;
pub mod series;

use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Two objects living on tori of different dimensions were combined.
    #[error("dimension mismatch: expected n = {expected}, got n = {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// Two quantum-torus elements with different deformation parameters
    /// were combined.
    #[error("quantum parameter mismatch between operands")]
    ParameterMismatch,
    /// A homogeneous degree was required but not satisfied.
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
    /// Division by zero in an exact ring.
    #[error("division by zero")]
    DivisionByZero,
    /// A matrix or operator that must be invertible is singular.
    #[error("singular matrix where an invertible one was required")]
    Singular,
    /// A construction received input outside its domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Malformed serialized input.
    #[error("malformed input: {0}")]
    Malformed(String),
}

/// Convenient result alias for fallible exact computations.
pub type Result<T> = std::result::Result<T, Error>;
