use ff::PrimeField;
use sha2::{Digest, Sha256};

use super::field::from_uniform_bytes;
use crate::{Error, Result};

/// Fiat-Shamir transcript over SHA-256.
///
/// Every absorbed item is framed as `len(label) || label || len(data) ||
/// data`, so distinct item sequences never hash the same byte stream.
/// Squeezing a challenge folds its seed back into the state, so later
/// challenges depend on earlier ones.
#[derive(Clone)]
pub struct Transcript {
    state: Sha256,
}

impl Transcript {
    pub fn new(protocol: &[u8]) -> Self {
        let mut t = Self { state: Sha256::new() };
        t.append(b"protocol", protocol);
        t
    }

    pub fn append(&mut self, label: &[u8], data: &[u8]) {
        self.state.update((label.len() as u64).to_le_bytes());
        self.state.update(label);
        self.state.update((data.len() as u64).to_le_bytes());
        self.state.update(data);
    }

    pub fn append_u64(&mut self, label: &[u8], v: u64) {
        self.append(label, &v.to_le_bytes());
    }

    pub fn append_scalar<F: PrimeField>(&mut self, label: &[u8], s: &F) {
        self.append(label, s.to_repr().as_ref());
    }

    /// Opens an output stream for `label` and ratchets the state.
    pub fn challenge_stream(&mut self, label: &[u8]) -> ChallengeStream {
        let mut h = self.state.clone();
        h.update(b"challenge");
        h.update((label.len() as u64).to_le_bytes());
        h.update(label);
        let seed: [u8; 32] = h.finalize().into();
        self.append(b"ratchet", &seed);
        ChallengeStream::new(seed)
    }

    pub fn challenge_bytes(&mut self, label: &[u8]) -> [u8; 32] {
        let mut stream = self.challenge_stream(label);
        let mut out = [0u8; 32];
        stream.fill(&mut out);
        out
    }

    pub fn challenge_scalar<F: PrimeField>(&mut self, label: &[u8]) -> F {
        self.challenge_stream(label).scalar()
    }

    pub fn challenge_scalars<F: PrimeField>(&mut self, label: &[u8], count: usize) -> Vec<F> {
        let mut stream = self.challenge_stream(label);
        (0..count).map(|_| stream.scalar()).collect()
    }
}

/// Counter-mode expansion of a 32-byte seed.
#[derive(Clone)]
pub struct ChallengeStream {
    seed: [u8; 32],
    counter: u64,
    block: [u8; 32],
    used: usize,
}

impl ChallengeStream {
    pub fn new(seed: [u8; 32]) -> Self {
        Self { seed, counter: 0, block: [0; 32], used: 32 }
    }

    pub fn fill(&mut self, out: &mut [u8]) {
        for byte in out {
            if self.used == 32 {
                let mut h = Sha256::new();
                h.update(self.seed);
                h.update(self.counter.to_le_bytes());
                self.block = h.finalize().into();
                self.counter += 1;
                self.used = 0;
            }
            *byte = self.block[self.used];
            self.used += 1;
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut b = [0u8; 8];
        self.fill(&mut b);
        u64::from_le_bytes(b)
    }

    /// Unbiased integer in `0..bound`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let zone = u64::MAX - (u64::MAX % bound + 1) % bound;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % bound;
            }
        }
    }

    /// Field element from 512 stream bits.
    pub fn scalar<F: PrimeField>(&mut self) -> F {
        let mut b = [0u8; 64];
        self.fill(&mut b);
        from_uniform_bytes(&b)
    }
}

/// Deterministically samples `k` distinct indices from `0..m`, returned in
/// ascending order.
pub fn derive_subset(seed: &[u8], m: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > m {
        return Err(Error::domain(format!("cannot draw {k} distinct indices from {m}")));
    }
    if k == m {
        return Ok((0..m).collect());
    }
    let mut t = Transcript::new(b"fde/derive-subset");
    t.append(b"seed", seed);
    t.append_u64(b"m", m as u64);
    t.append_u64(b"k", k as u64);
    let mut stream = t.challenge_stream(b"indices");
    let mut taken = vec![false; m];
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let i = stream.below(m as u64) as usize;
        if !taken[i] {
            taken[i] = true;
            out.push(i);
        }
    }
    out.sort_unstable();
    Ok(out)
}
