use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use blstrs::{G1Affine, G1Projective, G2Affine};
use group::prime::PrimeCurveAffine;
use group::{Curve, Group};

use crate::kzg::{Bls12, FixedBaseTable, PairingBackend};
use crate::{Error, Result, Scalar};

const BASE_DST: &[u8] = b"FDE-V01-CS01-with-BLS12381G1_XMD:SHA-256_SSWU_RO_";

/// Default chunk width in bits.
pub const DEFAULT_CHUNK_BITS: u32 = 16;

/// Position of the extra slot that carries the blinding scalar.
pub const MINUS_ONE: i64 = -1;

/// Public parameters: `h` and one base per (position, chunk).
///
/// Bases are hashed to the curve on first use and cached, so verifiers only
/// pay for the positions they actually check.
#[derive(Clone)]
pub struct VeckParams {
    seed: Vec<u8>,
    chunk_bits: u32,
    h: G1Affine,
    g1_table: Arc<FixedBaseTable<G1Projective>>,
    bases: Arc<RwLock<HashMap<i64, Arc<[G1Affine]>>>>,
}

impl std::fmt::Debug for VeckParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VeckParams")
            .field("seed", &String::from_utf8_lossy(&self.seed))
            .field("chunk_bits", &self.chunk_bits)
            .finish()
    }
}

pub(crate) fn hash_to_g1(msg: &[u8]) -> G1Affine {
    G1Projective::hash_to_curve(msg, BASE_DST, &[]).to_affine()
}

impl VeckParams {
    pub fn new(seed: &[u8], chunk_bits: u32) -> Result<Self> {
        if !(8..=24).contains(&chunk_bits) {
            return Err(Error::domain(format!("chunk width {chunk_bits} outside 8..=24")));
        }
        let mut label = b"fde/h/".to_vec();
        label.extend_from_slice(seed);
        Ok(Self {
            seed: seed.to_vec(),
            chunk_bits,
            h: hash_to_g1(&label),
            g1_table: Arc::new(FixedBaseTable::with_normalizer(
                G1Projective::generator(),
                8,
                255,
                Bls12::normalize_g1,
            )),
            bases: Arc::default(),
        })
    }

    pub fn seed(&self) -> &[u8] {
        &self.seed
    }

    pub fn chunk_bits(&self) -> u32 {
        self.chunk_bits
    }

    /// Chunks per symbol, `ceil(255 / b)`.
    pub fn chunks(&self) -> usize {
        255usize.div_ceil(self.chunk_bits as usize)
    }

    pub fn h(&self) -> G1Affine {
        self.h
    }

    pub fn g1() -> G1Affine {
        G1Affine::generator()
    }

    pub fn g2() -> G2Affine {
        G2Affine::generator()
    }

    /// `x * g1` for a chunk-sized integer.
    pub(crate) fn g1_small(&self, x: u64) -> G1Projective {
        self.g1_table.mul_u64(x)
    }

    pub(crate) fn g1_mul(&self, s: &Scalar) -> G1Projective {
        self.g1_table.mul(s)
    }

    /// Per-chunk bases of `position`; a single base for the `-1` slot.
    pub fn bases(&self, position: i64) -> Arc<[G1Affine]> {
        if let Some(b) = self.bases.read().unwrap().get(&position) {
            return b.clone();
        }
        let derived = self.derive(position);
        self.bases.write().unwrap().entry(position).or_insert(derived).clone()
    }

    fn derive(&self, position: i64) -> Arc<[G1Affine]> {
        let count = if position == MINUS_ONE { 1 } else { self.chunks() };
        let mut msg = b"fde/base/".to_vec();
        msg.extend_from_slice(&(self.seed.len() as u64).to_le_bytes());
        msg.extend_from_slice(&self.seed);
        msg.extend_from_slice(&position.to_le_bytes());
        let prefix = msg.len();
        (0..count as u16)
            .map(|j| {
                msg.truncate(prefix);
                msg.extend_from_slice(&j.to_le_bytes());
                hash_to_g1(&msg)
            })
            .collect()
    }

    /// Derives and caches the bases for positions `0..m` up front.
    pub fn precompute(&self, m: usize) {
        for i in 0..m as i64 {
            self.bases(i);
        }
        self.bases(MINUS_ONE);
    }
}
