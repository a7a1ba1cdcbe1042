use std::collections::HashMap;
use std::sync::OnceLock;

use blstrs::{G1Affine, G1Projective, G2Affine, Scalar};
use ff::Field;
use group::{Curve, Group};
use rand::RngCore;
use sha2::{Digest, Sha256};

use super::counters;
use super::params::VeckParams;
use crate::kzg::{Bls12, PairingBackend};
use crate::{Error, Result};

/// Public half of a key: `vk = h^sk` and the G2 companion `g2^sk`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerificationKey {
    pub vk: G1Affine,
    pub vk2: G2Affine,
}

pub const VERIFICATION_KEY_BYTES: usize = 48 + 96;

impl VerificationKey {
    pub fn to_bytes(&self) -> [u8; VERIFICATION_KEY_BYTES] {
        let mut out = [0u8; VERIFICATION_KEY_BYTES];
        out[..48].copy_from_slice(&self.vk.to_compressed());
        out[48..].copy_from_slice(&self.vk2.to_compressed());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != VERIFICATION_KEY_BYTES {
            return Err(Error::encoding("verification key has the wrong length"));
        }
        Ok(Self {
            vk: decode_g1(&bytes[..48])?,
            vk2: decode_g2(&bytes[48..])?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Keypair {
    pub sk: Scalar,
    pub public: VerificationKey,
}

impl Keypair {
    pub fn generate(params: &VeckParams, rng: &mut impl RngCore) -> Self {
        loop {
            if let Ok(kp) = Self::from_secret(params, Scalar::random(&mut *rng)) {
                return kp;
            }
        }
    }

    /// Rejects the degenerate keys 0 and 1.
    pub fn from_secret(params: &VeckParams, sk: Scalar) -> Result<Self> {
        if sk == Scalar::ZERO || sk == Scalar::ONE {
            return Err(Error::domain("degenerate secret key"));
        }
        Ok(Self {
            sk,
            public: VerificationKey {
                vk: (params.h() * sk).to_affine(),
                vk2: (VeckParams::g2() * sk).to_affine(),
            },
        })
    }
}

/// Accepts iff `h^sk = vk`.
pub fn ver_key(params: &VeckParams, vk: &G1Affine, sk: &Scalar) -> bool {
    (params.h() * sk).to_affine() == *vk
}

pub(crate) fn decode_g1(bytes: &[u8]) -> Result<G1Affine> {
    let arr: [u8; 48] = bytes.try_into().map_err(|_| Error::encoding("G1 point needs 48 bytes"))?;
    Option::from(G1Affine::from_compressed(&arr)).ok_or_else(|| Error::encoding("invalid G1 point"))
}

pub(crate) fn decode_g2(bytes: &[u8]) -> Result<G2Affine> {
    let arr: [u8; 96] = bytes.try_into().map_err(|_| Error::encoding("G2 point needs 96 bytes"))?;
    Option::from(G2Affine::from_compressed(&arr)).ok_or_else(|| Error::encoding("invalid G2 point"))
}

/// Splits a scalar into `count` little-endian limbs of `bits` bits.
pub fn chunk_values(x: &Scalar, bits: u32, count: usize) -> Vec<u64> {
    let bytes = x.to_bytes_le();
    let bit = |k: usize| k < 256 && (bytes[k / 8] >> (k % 8)) & 1 == 1;
    (0..count)
        .map(|j| {
            (0..bits as usize).fold(0u64, |acc, b| acc | (bit(j * bits as usize + b) as u64) << b)
        })
        .collect()
}

/// `sum_j chunks[j] * 2^(j * bits)` reduced into the field.
pub fn recompose(chunks: &[u64], bits: u32) -> Scalar {
    let radix = Scalar::from(1u64 << bits);
    chunks.iter().rev().fold(Scalar::ZERO, |acc, c| acc * radix + Scalar::from(*c))
}

/// Ciphertext chunks of one position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CtBlock {
    pub index: u64,
    pub chunks: Vec<G1Affine>,
}

impl CtBlock {
    pub fn encoded_len(&self) -> usize {
        8 + 2 + 48 * self.chunks.len()
    }

    pub fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.index.to_le_bytes());
        out.extend_from_slice(&(self.chunks.len() as u16).to_le_bytes());
        for c in &self.chunks {
            out.extend_from_slice(&c.to_compressed());
        }
    }

    /// Parses one block. Points are checked to lie on the curve but not
    /// in the prime-order subgroup; verifiers check the subgroup for the
    /// positions they rely on, and elsewhere such a point only fails to
    /// decrypt.
    pub fn read(bytes: &mut &[u8]) -> Result<Self> {
        let index = u64::from_le_bytes(take(bytes, 8)?.try_into().unwrap());
        let count = u16::from_le_bytes(take(bytes, 2)?.try_into().unwrap()) as usize;
        let mut chunks = Vec::with_capacity(count);
        for _ in 0..count {
            let arr: [u8; 48] = take(bytes, 48)?.try_into().unwrap();
            let p: Option<G1Affine> = G1Affine::from_compressed_unchecked(&arr).into();
            chunks.push(p.ok_or_else(|| Error::encoding("chunk is not a curve point"))?);
        }
        Ok(Self { index, chunks })
    }

    pub fn in_subgroup(&self) -> bool {
        self.chunks.iter().all(|c| bool::from(c.is_torsion_free()))
    }
}

pub(crate) fn take<'a>(bytes: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::encoding("truncated input"));
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

/// Chunked exponential-ElGamal ciphertexts for a set of positions, sorted
/// by position.
#[derive(Clone, Debug, Default)]
pub struct ChunkedCiphertext {
    blocks: Vec<CtBlock>,
    digest: OnceLock<[u8; 32]>,
}

impl PartialEq for ChunkedCiphertext {
    fn eq(&self, other: &Self) -> bool {
        self.blocks == other.blocks
    }
}

impl ChunkedCiphertext {
    pub fn from_blocks(blocks: Vec<CtBlock>) -> Result<Self> {
        if blocks.windows(2).any(|w| w[0].index >= w[1].index) {
            return Err(Error::encoding("ciphertext blocks must have increasing positions"));
        }
        Ok(Self { blocks, digest: OnceLock::new() })
    }

    pub fn blocks(&self) -> &[CtBlock] {
        &self.blocks
    }

    /// Mutable access for fault injection; clears the cached digest.
    pub fn blocks_mut(&mut self) -> &mut [CtBlock] {
        self.digest = OnceLock::new();
        &mut self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn get(&self, index: u64) -> Option<&CtBlock> {
        match self.blocks.get(index as usize) {
            Some(b) if b.index == index => Some(b),
            _ => self.blocks.binary_search_by_key(&index, |b| b.index).ok().map(|k| &self.blocks[k]),
        }
    }

    /// The blocks at `indices`, failing if any is missing.
    pub fn restrict(&self, indices: &[u64]) -> Result<ChunkedCiphertext> {
        let blocks = indices
            .iter()
            .map(|i| self.get(*i).cloned().ok_or_else(|| Error::domain(format!("no ciphertext at {i}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_blocks(blocks)
    }

    pub fn encoded_len(&self) -> usize {
        8 + self.blocks.iter().map(CtBlock::encoded_len).sum::<usize>()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&(self.blocks.len() as u64).to_le_bytes());
        for b in &self.blocks {
            b.write(&mut out);
        }
        out
    }

    /// Parses and computes the digest while the bytes are at hand.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cursor = bytes;
        let n = u64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap()) as usize;
        let mut blocks = Vec::with_capacity(n.min(cursor.len() / 10));
        for _ in 0..n {
            blocks.push(CtBlock::read(&mut cursor)?);
        }
        if !cursor.is_empty() {
            return Err(Error::encoding("trailing bytes after ciphertext"));
        }
        let ct = Self::from_blocks(blocks)?;
        let _ = ct.digest.set(Sha256::digest(bytes).into());
        Ok(ct)
    }

    /// SHA-256 of the encoding, computed once.
    pub fn digest(&self) -> [u8; 32] {
        *self.digest.get_or_init(|| Sha256::digest(self.to_bytes()).into())
    }
}

/// Encrypts `values[k]` at position `indices[k]` under `keypair`.
pub fn enc1(
    params: &VeckParams,
    indices: &[u64],
    values: &[Scalar],
    keypair: &Keypair,
) -> Result<ChunkedCiphertext> {
    if indices.len() != values.len() {
        return Err(Error::domain("one value per position required"));
    }
    let bits = params.chunk_bits();
    let count = params.chunks();
    let mut blocks = Vec::with_capacity(indices.len());
    const BATCH: usize = 1024;
    for (idx, vals) in indices.chunks(BATCH).zip(values.chunks(BATCH)) {
        let mut proj = Vec::with_capacity(idx.len() * count);
        for (i, x) in idx.iter().zip(vals) {
            let bases = params.bases(*i as i64);
            for (base, xj) in bases.iter().zip(chunk_values(x, bits, count)) {
                proj.push(G1Projective::from(base) * keypair.sk + params.g1_small(xj));
            }
        }
        counters::record(proj.len() as u64);
        let affine = Bls12::normalize_g1(&proj);
        for (i, chunks) in idx.iter().zip(affine.chunks(count)) {
            blocks.push(CtBlock { index: *i, chunks: chunks.to_vec() });
        }
    }
    ChunkedCiphertext::from_blocks(blocks)
}

/// Table from `x * g1` to `x` for `x < 2^b`.
pub struct DlogTable {
    bits: u32,
    map: HashMap<u64, u32>,
    collisions: Vec<(G1Affine, u32)>,
}

fn table_key(p: &G1Affine) -> u64 {
    let c = p.to_compressed();
    u64::from_le_bytes(c[40..48].try_into().unwrap())
}

impl DlogTable {
    pub fn new(bits: u32) -> Self {
        let size = 1usize << bits;
        let mut map = HashMap::with_capacity(size);
        let mut collisions = Vec::new();
        let g = G1Projective::generator();
        let mut acc = G1Projective::identity();
        let mut x = 0u32;
        while (x as usize) < size {
            let batch = (size - x as usize).min(1 << 14);
            let mut proj = Vec::with_capacity(batch);
            for _ in 0..batch {
                proj.push(acc);
                acc += g;
            }
            for p in Bls12::normalize_g1(&proj) {
                if map.insert(table_key(&p), x).is_some() {
                    collisions.push((p, x));
                }
                x += 1;
            }
        }
        Self { bits, map, collisions }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn lookup(&self, params: &VeckParams, p: &G1Affine) -> Option<u64> {
        if let Some(&x) = self.map.get(&table_key(p)) {
            if params.g1_small(x as u64).to_affine() == *p {
                return Some(x as u64);
            }
        }
        self.collisions.iter().find(|(q, _)| q == p).map(|(_, x)| *x as u64)
    }
}

/// Decrypts every block; a chunk outside the table erases its position.
pub fn dec(
    params: &VeckParams,
    table: &DlogTable,
    sk: &Scalar,
    ct: &ChunkedCiphertext,
) -> Result<Vec<Option<Scalar>>> {
    if table.bits() != params.chunk_bits() {
        return Err(Error::domain("lookup table width differs from the chunk width"));
    }
    let bits = params.chunk_bits();
    let mut out = Vec::with_capacity(ct.len());
    const BATCH: usize = 1024;
    for group in ct.blocks().chunks(BATCH) {
        let mut proj = Vec::new();
        let mut shapes = Vec::with_capacity(group.len());
        for block in group {
            let bases = params.bases(block.index as i64);
            let ok = block.chunks.len() == params.chunks();
            shapes.push(ok);
            if ok {
                for (c, base) in block.chunks.iter().zip(bases.iter()) {
                    proj.push(G1Projective::from(c) - G1Projective::from(base) * sk);
                }
            }
        }
        counters::record(proj.len() as u64);
        let plain = Bls12::normalize_g1(&proj);
        let mut cursor = plain.chunks(params.chunks());
        for ok in shapes {
            if !ok {
                out.push(None);
                continue;
            }
            let chunk_points = cursor.next().expect("one slice per well-formed block");
            let xs: Option<Vec<u64>> = chunk_points.iter().map(|p| table.lookup(params, p)).collect();
            out.push(xs.map(|xs| recompose(&xs, bits)));
        }
    }
    Ok(out)
}
