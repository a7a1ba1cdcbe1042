//! Building blocks for fair data exchange.
//!
//! A server commits to a file with a KZG commitment, extends the file with a
//! Reed-Solomon code and hands the client ciphertexts together with a proof
//! that they encrypt the committed data under a key matching a published
//! verification key. Two schemes are provided:
//!
//! * [`veck::plus`] encrypts every code symbol with chunked exponential
//!   ElGamal and proves consistency on a Fiat-Shamir sample of positions.
//! * [`veck::star`] masks the whole codeword with a hash-derived stream and
//!   only ElGamal-encrypts the sampled positions, linking the two layers with
//!   a pluggable proof backend.
//!
//! In both cases the proof work depends on the security parameter rather than
//! the file size, and the code layer absorbs any positions that fail to
//! decrypt after the key is revealed.

pub mod algebra;
mod error;
pub mod kzg;
pub mod rscode;
pub mod veck;

pub use algebra::Scalar;
pub use error::{Error, Result};
pub use veck::{Rejection, Verdict};

/// Security parameter used to size the sampled subset.
pub const SECURITY_BITS: usize = 128;
