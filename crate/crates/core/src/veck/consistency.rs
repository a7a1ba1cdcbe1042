//! Proof that the sampled ciphertexts encrypt committed evaluations.
//!
//! For a sample `S` the prover splits `phi = Q * V_S + R`, blinds the
//! remainder as `phi'' = R + t * V_S` and commits to it. A batch opening
//! shows `phi - phi''` vanishes on `S`, and one generalized Schnorr proof
//! shows, for a single `sk` and coefficient vector `a` of `phi''`:
//!
//! * `vk = sk * h` and `C'' = sum_r a_r * G_r`,
//! * `ct_{i,j} = sk * h_{i,j} + x_{i,j} * g1` for every sampled chunk,
//! * `sum_j 2^(jb) x_{i,j} = phi''(i)`,
//! * `ct_- = sk * h_{-1} + a_k * g1`, i.e. the slot `-1` encrypts `t`.
//!
//! The last linear constraint is enforced by deriving the nonce and the
//! response for chunk 0 from the others. Chunk ranges are not proven; an
//! out-of-range chunk fails to decrypt and becomes an erasure.

use blstrs::{G1Affine, G1Projective, G2Affine, Scalar};
use ff::Field;
use group::Curve;
use rand::RngCore;
use sha2::{Digest, Sha256};

use super::elgamal::{chunk_values, decode_g1, take, ChunkedCiphertext, Keypair, VerificationKey};
use super::params::{VeckParams, MINUS_ONE};
use super::{Rejection, Verdict};
use crate::algebra::{vanishing, Polynomial, Transcript};
use crate::kzg::{self, Bls12, Crs, PairingBackend};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsistencyProof {
    /// Commitment to the blinded sub-polynomial `phi''`.
    pub c_blind: G1Affine,
    /// Batch opening of `phi - phi''` to zero on the sample.
    pub batch: G1Affine,
    /// Encryption of the blinding scalar at slot `-1`.
    pub ct_minus: G1Affine,
    pub a_vk: G1Affine,
    pub a_c: G1Affine,
    pub a_minus: G1Affine,
    /// Nonce commitments, `chunks` per sampled position.
    pub a_x: Vec<G1Affine>,
    pub z_sk: Scalar,
    /// Responses for the `k + 1` coefficients of `phi''`.
    pub z_a: Vec<Scalar>,
    /// Responses for chunks `1..chunks` of each sampled position.
    pub z_x: Vec<Scalar>,
}

fn powers_of(x: u64, n: usize) -> Vec<Scalar> {
    let x = Scalar::from(x);
    let mut out = Vec::with_capacity(n);
    let mut acc = Scalar::ONE;
    for _ in 0..n {
        out.push(acc);
        acc *= x;
    }
    out
}

fn dot(a: &[Scalar], b: &[Scalar]) -> Scalar {
    a.iter().zip(b).map(|(x, y)| *x * y).sum()
}

fn sample_digest(ct: &ChunkedCiphertext, sample: &[u64]) -> Option<[u8; 32]> {
    let mut h = Sha256::new();
    let mut buf = Vec::new();
    for i in sample {
        buf.clear();
        ct.get(*i)?.write(&mut buf);
        h.update(&buf);
    }
    Some(h.finalize().into())
}

fn absorb_statement(
    tr: &mut Transcript,
    sample: &[u64],
    c: &G1Affine,
    vk: &VerificationKey,
    ct_digest: &[u8; 32],
    proof: &ConsistencyProof,
) {
    tr.append(b"el/sample", &sample.iter().flat_map(|i| i.to_le_bytes()).collect::<Vec<_>>());
    tr.append(b"el/commitment", &c.to_compressed());
    tr.append(b"el/vk", &vk.to_bytes());
    tr.append(b"el/ct", ct_digest);
    tr.append(b"el/c-blind", &proof.c_blind.to_compressed());
    tr.append(b"el/batch", &proof.batch.to_compressed());
    tr.append(b"el/ct-minus", &proof.ct_minus.to_compressed());
    tr.append(b"el/a-vk", &proof.a_vk.to_compressed());
    tr.append(b"el/a-c", &proof.a_c.to_compressed());
    tr.append(b"el/a-minus", &proof.a_minus.to_compressed());
    let mut h = Sha256::new();
    for a in &proof.a_x {
        h.update(a.to_compressed());
    }
    tr.append(b"el/a-x", &h.finalize());
}

/// Builds the consistency proof for `sample` against the commitment `c` to
/// `phi`. `ct` must hold honest encryptions of `phi` at those positions
/// under `keypair`.
#[allow(clippy::too_many_arguments)]
pub fn enc2(
    params: &VeckParams,
    crs: &Crs,
    sample: &[u64],
    c: &G1Affine,
    phi: &Polynomial,
    ct: &ChunkedCiphertext,
    keypair: &Keypair,
    transcript: &mut Transcript,
    rng: &mut impl RngCore,
) -> Result<ConsistencyProof> {
    let k = sample.len();
    let chunks = params.chunks();
    let bits = params.chunk_bits();
    if k > crs.max_degree() {
        return Err(Error::domain("sample larger than the reference string"));
    }
    let ct_digest = sample_digest(ct, sample)
        .ok_or_else(|| Error::domain("ciphertext does not cover the sample"))?;

    let points: Vec<Scalar> = sample.iter().map(|i| Scalar::from(*i)).collect();
    let v = vanishing(&points);
    let (q, r) = phi.div_rem(&v)?;
    let t = Scalar::random(&mut *rng);
    let blinded = &r + &v.scale(&t);
    let mut a = blinded.coeffs().to_vec();
    a.resize(k + 1, Scalar::ZERO);

    let g1 = G1Projective::from(VeckParams::g1());
    let c_blind = kzg::commit(crs, &blinded)?;
    let batch = (G1Projective::from(kzg::commit(crs, &q)?) - g1 * t).to_affine();
    let minus_base = params.bases(MINUS_ONE)[0];
    let ct_minus = (minus_base * keypair.sk + params.g1_mul(&t)).to_affine();

    // Nonces, with chunk 0 of each position tied to the coefficient nonces.
    let rho_sk = Scalar::random(&mut *rng);
    let rho_a: Vec<Scalar> = (0..=k).map(|_| Scalar::random(&mut *rng)).collect();
    let radix: Vec<Scalar> = (0..chunks).map(|j| Scalar::from(2u64).pow_vartime([(j as u64) * bits as u64])).collect();
    let mut rho_x = Vec::with_capacity(k * chunks);
    let mut x = Vec::with_capacity(k * chunks);
    for i in sample {
        let pw = powers_of(*i, k + 1);
        let mut rest: Vec<Scalar> = (1..chunks).map(|_| Scalar::random(&mut *rng)).collect();
        let first = dot(&rho_a, &pw) - dot(&rest, &radix[1..]);
        rho_x.push(first);
        rho_x.append(&mut rest);
        let value = blinded.eval(&Scalar::from(*i));
        x.extend(chunk_values(&value, bits, chunks).into_iter().map(Scalar::from));
    }

    let a_vk = (params.h() * rho_sk).to_affine();
    let a_c = Bls12::msm_g1(&crs.g1_powers()[..=k], &rho_a).to_affine();
    let a_minus = (minus_base * rho_sk + params.g1_mul(&rho_a[k])).to_affine();
    let mut a_proj = Vec::with_capacity(k * chunks);
    for (n, i) in sample.iter().enumerate() {
        let bases = params.bases(*i as i64);
        for (j, base) in bases.iter().enumerate() {
            a_proj.push(G1Projective::from(base) * rho_sk + params.g1_mul(&rho_x[n * chunks + j]));
        }
    }
    let a_x = Bls12::normalize_g1(&a_proj);

    let mut proof = ConsistencyProof {
        c_blind,
        batch,
        ct_minus,
        a_vk,
        a_c,
        a_minus,
        a_x,
        z_sk: Scalar::ZERO,
        z_a: Vec::new(),
        z_x: Vec::new(),
    };
    absorb_statement(transcript, sample, c, &keypair.public, &ct_digest, &proof);
    let e: Scalar = transcript.challenge_scalar(b"el/challenge");

    proof.z_sk = rho_sk + e * keypair.sk;
    proof.z_a = rho_a.iter().zip(&a).map(|(r, w)| *r + e * w).collect();
    proof.z_x = (0..k)
        .flat_map(|n| (1..chunks).map(move |j| n * chunks + j))
        .map(|idx| rho_x[idx] + e * x[idx])
        .collect();
    Ok(proof)
}

/// Checks a consistency proof on `sample`.
#[allow(clippy::too_many_arguments)]
pub fn ver_ct(
    params: &VeckParams,
    crs: &Crs,
    sample: &[u64],
    c: &G1Affine,
    vk: &VerificationKey,
    ct: &ChunkedCiphertext,
    proof: &ConsistencyProof,
    transcript: &mut Transcript,
    rng: &mut impl RngCore,
) -> Verdict {
    let g1 = VeckParams::g1();
    let g2 = VeckParams::g2();
    if !Bls12::pairing_product_is_one(&[(params.h(), vk.vk2), (-vk.vk, g2)]) {
        return Verdict::Reject(Rejection::KeyPairing);
    }

    let k = sample.len();
    let chunks = params.chunks();
    let bits = params.chunk_bits();
    if proof.a_x.len() != k * chunks
        || proof.z_a.len() != k + 1
        || proof.z_x.len() != k * (chunks - 1)
        || k > crs.max_degree()
    {
        return Verdict::Reject(Rejection::Malformed);
    }
    let mut blocks = Vec::with_capacity(k);
    for i in sample {
        match ct.get(*i) {
            Some(b) if b.chunks.len() == chunks => {
                if !b.in_subgroup() {
                    return Verdict::Reject(Rejection::InvalidPoint);
                }
                blocks.push(b);
            }
            _ => return Verdict::Reject(Rejection::Malformed),
        }
    }

    // phi - phi'' vanishes on the sample.
    let points: Vec<Scalar> = sample.iter().map(|i| Scalar::from(*i)).collect();
    let v_tau: G2Affine = Bls12::msm_g2(crs.g2_powers(), vanishing(&points).coeffs()).to_affine();
    let diff = (G1Projective::from(c) - G1Projective::from(proof.c_blind)).to_affine();
    if !Bls12::pairing_product_is_one(&[(diff, g2), (-proof.batch, v_tau)]) {
        return Verdict::Reject(Rejection::SampleOpening);
    }

    let ct_digest = sample_digest(ct, sample).expect("blocks checked above");
    absorb_statement(transcript, sample, c, vk, &ct_digest, proof);
    let e: Scalar = transcript.challenge_scalar(b"el/challenge");

    // All group equations in one multi-scalar multiplication with random
    // weights; it is the identity iff every equation holds, except with
    // negligible probability.
    let radix: Vec<Scalar> = (0..chunks).map(|j| Scalar::from(2u64).pow_vartime([(j as u64) * bits as u64])).collect();
    let mut bases: Vec<G1Affine> = Vec::with_capacity(3 * k * chunks + k + 12);
    let mut scalars: Vec<Scalar> = Vec::with_capacity(bases.capacity());
    let mut push = |b: G1Affine, s: Scalar| {
        bases.push(b);
        scalars.push(s);
    };

    let w_vk = Scalar::random(&mut *rng);
    push(params.h(), w_vk * proof.z_sk);
    push(vk.vk, -w_vk * e);
    push(proof.a_vk, -w_vk);

    let w_c = Scalar::random(&mut *rng);
    for (g, z) in crs.g1_powers()[..=k].iter().zip(&proof.z_a) {
        push(*g, w_c * z);
    }
    push(proof.c_blind, -w_c * e);
    push(proof.a_c, -w_c);

    let w_m = Scalar::random(&mut *rng);
    let mut g1_coeff = w_m * proof.z_a[k];
    push(params.bases(MINUS_ONE)[0], w_m * proof.z_sk);
    push(proof.ct_minus, -w_m * e);
    push(proof.a_minus, -w_m);

    for (n, (i, block)) in sample.iter().zip(&blocks).enumerate() {
        let rest = &proof.z_x[n * (chunks - 1)..(n + 1) * (chunks - 1)];
        let pw = powers_of(*i, k + 1);
        let z0 = dot(&proof.z_a, &pw) - dot(rest, &radix[1..]);
        let position_bases = params.bases(*i as i64);
        for j in 0..chunks {
            let w = Scalar::random(&mut *rng);
            let z = if j == 0 { z0 } else { rest[j - 1] };
            g1_coeff += w * z;
            push(position_bases[j], w * proof.z_sk);
            push(block.chunks[j], -w * e);
            push(proof.a_x[n * chunks + j], -w);
        }
    }
    push(g1, g1_coeff);

    if bool::from(group::Group::is_identity(&Bls12::msm_g1(&bases, &scalars))) {
        Verdict::Accept
    } else {
        Verdict::Reject(Rejection::SampleEncryption)
    }
}

impl ConsistencyProof {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.z_a.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.a_x.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.z_x.len() as u32).to_le_bytes());
        for p in [self.c_blind, self.batch, self.ct_minus, self.a_vk, self.a_c, self.a_minus] {
            out.extend_from_slice(&p.to_compressed());
        }
        for p in &self.a_x {
            out.extend_from_slice(&p.to_compressed());
        }
        out.extend_from_slice(&self.z_sk.to_bytes_le());
        for s in self.z_a.iter().chain(&self.z_x) {
            out.extend_from_slice(&s.to_bytes_le());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = bytes;
        let mut count = || -> Result<usize> {
            Ok(u32::from_le_bytes(take(&mut cur, 4)?.try_into().unwrap()) as usize)
        };
        let (n_a, n_ax, n_zx) = (count()?, count()?, count()?);
        let needed = 6 * 48 + n_ax * 48 + (1 + n_a + n_zx) * 32;
        if cur.len() != needed {
            return Err(Error::encoding("consistency proof has the wrong length"));
        }
        let mut point = || decode_g1(take(&mut cur, 48)?);
        let c_blind = point()?;
        let batch = point()?;
        let ct_minus = point()?;
        let a_vk = point()?;
        let a_c = point()?;
        let a_minus = point()?;
        let a_x = (0..n_ax).map(|_| point()).collect::<Result<Vec<_>>>()?;
        let mut scalar = || crate::algebra::scalar_from_bytes(take(&mut cur, 32)?);
        let z_sk = scalar()?;
        let z_a = (0..n_a).map(|_| scalar()).collect::<Result<Vec<_>>>()?;
        let z_x = (0..n_zx).map(|_| scalar()).collect::<Result<Vec<_>>>()?;
        Ok(Self { c_blind, batch, ct_minus, a_vk, a_c, a_minus, a_x, z_sk, z_a, z_x })
    }
}
