//! Verifiable encryption under a committed key.
//!
//! [`elgamal`] and [`consistency`] form the baseline scheme: chunked
//! exponential ElGamal with a proof tying sampled ciphertexts to a KZG
//! commitment. [`plus`] applies it to every code symbol, [`star`] masks the
//! code with a hash stream and encrypts only the sample.

pub mod backend;
mod committed;
pub mod consistency;
pub mod counters;
pub mod elgamal;
pub mod params;
pub mod plus;
mod recovery;
pub mod star;

pub use committed::CommittedFile;
pub use consistency::{enc2, ver_ct, ConsistencyProof};
pub use elgamal::{dec, enc1, ver_key, ChunkedCiphertext, CtBlock, DlogTable, Keypair, VerificationKey};
pub use params::{VeckParams, DEFAULT_CHUNK_BITS};
pub use plus::{plus_dec, plus_enc_full, plus_enc_subset, plus_ver_full, plus_ver_subset, PlusConfig, VeckPlusBundle};
pub use recovery::{detect_then_correct, DecodePath, Recovery};
pub use backend::{BackendId, ConsistencyBackend, Relation, SessionMode, TransparentBackend};
pub use star::{mask_stream, star_dec, star_enc, star_ver, MaskHash, StarBundle, StarConfig, StarProof};

/// Why a verifier rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rejection {
    /// `e(h, vk2) != e(vk, g2)`.
    KeyPairing,
    /// The blinded sub-commitment does not agree with the commitment on
    /// the sample.
    SampleOpening,
    /// A sampled ciphertext, `ct_-` or a Schnorr equation is inconsistent.
    SampleEncryption,
    /// The purchased subset is not opened correctly against `C / C_S`.
    SubsetOpening,
    /// The supplied opening of `V_S` does not verify.
    VanishingOpening,
    /// The proof backend rejected the mask statement.
    MaskConsistency,
    /// Declared parameters do not match the session.
    ParamsMismatch,
    /// Wrong shape: missing positions, counts or lengths.
    Malformed,
    /// A point outside the prime-order subgroup.
    InvalidPoint,
    /// The proof backend named by the bundle is not available here.
    BackendUnavailable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(Rejection),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }

    /// Conjunction, keeping the first rejection.
    pub fn and(self, other: impl FnOnce() -> Verdict) -> Verdict {
        match self {
            Verdict::Accept => other(),
            r => r,
        }
    }
}

/// Sample size `min(ell + 1, ceil(lambda / (beta - 1)))`.
pub fn sample_size(data_len: usize, lambda: usize, beta: f64) -> usize {
    let bound = (lambda as f64 / (beta - 1.0)).ceil() as usize;
    data_len.min(bound.max(1))
}
