//! Payment rails for selling a decryption key.
//!
//! Three rails share one simulated ledger: an escrow contract that pays out
//! only against a key matching the registered verification key, a
//! Bitcoin-style HTLC locked to `t = SHA-256(sk)`, and a payment channel
//! whose HTLCs use the same hashlock. In every rail the server is paid
//! exactly when the key becomes public.

pub mod bridge;
pub mod channel;
pub mod contract;
mod error;
pub mod fairness;
pub mod htlc;
pub mod ledger;
mod serde_util;
pub mod sig;

pub use error::{PaymentError, Result};
pub use ledger::{Address, Event, MockLedger};

use blstrs::Scalar;
use sha2::{Digest, Sha256};

/// Canonical byte encoding of a key fed to the hashlock: 32 bytes,
/// little-endian.
pub fn secret_bytes(sk: &Scalar) -> [u8; 32] {
    sk.to_bytes_le()
}

/// `t = SHA-256(sk)` over [`secret_bytes`].
pub fn hashlock(sk: &Scalar) -> [u8; 32] {
    Sha256::digest(secret_bytes(sk)).into()
}

/// Parses a key revealed on some rail.
pub fn parse_secret(bytes: &[u8]) -> Option<Scalar> {
    let arr: [u8; 32] = bytes.try_into().ok()?;
    Option::from(Scalar::from_bytes_le(&arr))
}
