//! Scalar-field and polynomial arithmetic, evaluation domains and the
//! Fiat-Shamir transcript.
//!
//! Everything here is generic over [`ff::PrimeField`] so the coding layer can
//! run over a small prime for statistical tests. Pairing-dependent code pins
//! the BLS12-381 scalar field, re-exported as [`Scalar`].

mod consecutive;
mod domain;
mod field;
pub mod ntt;
mod poly;
mod transcript;

pub use consecutive::{extend_consecutive, interpolate_consecutive, FactorialTable};
pub use domain::EvalDomain;
pub use field::{
    from_uniform_bytes, scalar_from_bytes, scalar_from_uniform_bytes, scalar_to_bytes, small_field_element, ToyField,
    SCALAR_BYTES,
};
pub use poly::{interpolate, vanishing, Polynomial};
pub use transcript::{derive_subset, ChallengeStream, Transcript};

pub use blstrs::Scalar;
