//! Hash-masked code with encryption only on the sample.
//!
//! Every code symbol is sent as `phi(i) + H(sk, i)`. Only the sampled
//! positions are also ElGamal-encrypted, and a backend proof ties the two
//! layers together under one key. Decryption is unmasking plus the usual
//! detect-then-correct pass; no discrete logarithms are taken.

use std::ops::Range;
use std::sync::OnceLock;

use blstrs::{G1Affine, G1Projective, Scalar};
use ff::Field;
use group::Curve;
use rand::RngCore;
use sha2::{Digest, Sha256};

use super::backend::{BackendId, ConsistencyBackend, Relation};
use super::committed::CommittedFile;
use super::consistency::{enc2, ver_ct, ConsistencyProof};
use super::elgamal::{chunk_values, enc1, take, ChunkedCiphertext, Keypair, VerificationKey};
use super::params::VeckParams;
use super::recovery::{detect_then_correct, Recovery};
use super::{sample_size, Rejection, Verdict};
use crate::algebra::{derive_subset, extend_consecutive, from_uniform_bytes, scalar_from_bytes, scalar_from_uniform_bytes, Transcript};
use crate::kzg::{Bls12, Crs, PairingBackend};
use crate::rscode::{CodeParams, Codeword};
use crate::{Error, Result};

pub const BUNDLE_MAGIC: &[u8; 6] = b"FDEV*1";

const TAG_PARAMS: u8 = 1;
const TAG_VK: u8 = 2;
const TAG_MASKED: u8 = 3;
const TAG_PROOF: u8 = 4;

/// Hash used for the mask stream; both parties must agree on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
#[repr(u8)]
pub enum MaskHash {
    /// Two SHA-256 blocks reduced into the field.
    #[default]
    Sha256 = 0,
    /// MiMC-style Feistel permutation with feed-forward, cheap in circuits.
    Algebraic = 1,
}

impl TryFrom<u8> for MaskHash {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(MaskHash::Sha256),
            1 => Ok(MaskHash::Algebraic),
            _ => Err(Error::encoding(format!("unknown mask hash {v}"))),
        }
    }
}

const MIMC_ROUNDS: usize = 220;

fn mimc_constants() -> &'static [Scalar] {
    static C: OnceLock<Vec<Scalar>> = OnceLock::new();
    C.get_or_init(|| {
        (0..MIMC_ROUNDS as u64)
            .map(|r| {
                let mut wide = [0u8; 64];
                for (half, out) in wide.chunks_mut(32).enumerate() {
                    let mut h = Sha256::new();
                    h.update(b"fde/mimc-constant");
                    h.update(r.to_le_bytes());
                    h.update([half as u8]);
                    out.copy_from_slice(&h.finalize());
                }
                from_uniform_bytes(&wide)
            })
            .collect()
    })
}

fn mimc(sk: &Scalar, i: u64) -> Scalar {
    let (mut l, mut r) = (*sk, Scalar::from(i));
    for c in mimc_constants() {
        let t = l + c;
        let t2 = t.square();
        let next = r + t2.square() * t;
        r = l;
        l = next;
    }
    l + sk
}

/// `H(sk, i)` for every `i` in `range`.
pub fn mask_stream(hash: MaskHash, sk: &Scalar, range: Range<u64>) -> Vec<Scalar> {
    match hash {
        MaskHash::Sha256 => {
            let mut prefix = Sha256::new();
            prefix.update(b"fde/mask");
            prefix.update(sk.to_bytes_le());
            range
                .map(|i| {
                    let mut at = prefix.clone();
                    at.update(i.to_le_bytes());
                    let mut wide = [0u8; 64];
                    for (ctr, out) in wide.chunks_mut(32).enumerate() {
                        let mut h = at.clone();
                        h.update([ctr as u8]);
                        out.copy_from_slice(&h.finalize());
                    }
                    scalar_from_uniform_bytes(&wide)
                })
                .collect()
        }
        MaskHash::Algebraic => range.map(|i| mimc(sk, i)).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarConfig {
    pub lambda: usize,
    pub beta: f64,
    pub mask: MaskHash,
}

impl Default for StarConfig {
    fn default() -> Self {
        Self { lambda: crate::SECURITY_BITS, beta: 2.0, mask: MaskHash::Sha256 }
    }
}

impl StarConfig {
    pub fn header(&self, ell: usize, chunk_bits: u32) -> Result<StarHeader> {
        let code = CodeParams::new(ell, self.beta)?;
        Ok(StarHeader {
            lambda: self.lambda as u32,
            beta: self.beta,
            chunk_bits,
            mask: self.mask,
            ell: ell as u64,
            m: code.m as u64,
            sample_len: sample_size(ell + 1, self.lambda, self.beta) as u64,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarHeader {
    pub lambda: u32,
    pub beta: f64,
    pub chunk_bits: u32,
    pub mask: MaskHash,
    pub ell: u64,
    pub m: u64,
    pub sample_len: u64,
}

impl StarHeader {
    pub const ENCODED_LEN: usize = 4 + 8 + 4 + 1 + 8 + 8 + 8;

    pub fn code(&self) -> Result<CodeParams> {
        let code = CodeParams::new(self.ell as usize, self.beta)?;
        if code.m as u64 != self.m {
            return Err(Error::encoding("code length does not match the rate"));
        }
        Ok(code)
    }

    fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.lambda.to_le_bytes());
        out.extend_from_slice(&self.beta.to_bits().to_le_bytes());
        out.extend_from_slice(&self.chunk_bits.to_le_bytes());
        out.push(self.mask as u8);
        out.extend_from_slice(&self.ell.to_le_bytes());
        out.extend_from_slice(&self.m.to_le_bytes());
        out.extend_from_slice(&self.sample_len.to_le_bytes());
    }

    fn read(mut b: &[u8]) -> Result<Self> {
        if b.len() != Self::ENCODED_LEN {
            return Err(Error::encoding("bad parameter section"));
        }
        let u32_at = |b: &mut &[u8]| -> Result<u32> { Ok(u32::from_le_bytes(take(b, 4)?.try_into().unwrap())) };
        let u64_at = |b: &mut &[u8]| -> Result<u64> { Ok(u64::from_le_bytes(take(b, 8)?.try_into().unwrap())) };
        Ok(Self {
            lambda: u32_at(&mut b)?,
            beta: f64::from_bits(u64_at(&mut b)?),
            chunk_bits: u32_at(&mut b)?,
            mask: MaskHash::try_from(take(&mut b, 1)?[0])?,
            ell: u64_at(&mut b)?,
            m: u64_at(&mut b)?,
            sample_len: u64_at(&mut b)?,
        })
    }
}

/// The relation proven by the backend, over the sample `S_R`:
/// `vk = sk * h`, and for each sampled `i`, `masked_i = x_i + H(sk, i)` and
/// `ct'_i` encrypts the chunks of `x_i` under `sk`.
pub struct MaskRelation;

pub struct MaskStatement<'a> {
    pub params: &'a VeckParams,
    pub mask: MaskHash,
    pub vk: &'a VerificationKey,
    pub sample: &'a [u64],
    /// Masked symbols at the sampled positions.
    pub masked: &'a [Scalar],
    pub ct: &'a ChunkedCiphertext,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskWitness {
    pub sk: Scalar,
    pub x: Vec<Scalar>,
}

impl Relation for MaskRelation {
    type Statement<'a> = MaskStatement<'a>;
    type Witness = MaskWitness;

    fn holds(st: &MaskStatement<'_>, w: &MaskWitness) -> bool {
        let n = st.sample.len();
        if w.x.len() != n || st.masked.len() != n {
            return false;
        }
        if (st.params.h() * w.sk).to_affine() != st.vk.vk {
            return false;
        }
        for (k, i) in st.sample.iter().enumerate() {
            if mask_stream(st.mask, &w.sk, *i..*i + 1)[0] + w.x[k] != st.masked[k] {
                return false;
            }
        }
        let chunks = st.params.chunks();
        let mut expected = Vec::with_capacity(n * chunks);
        let mut received = Vec::with_capacity(n * chunks);
        for (i, x) in st.sample.iter().zip(&w.x) {
            let Some(block) = st.ct.get(*i) else { return false };
            if block.chunks.len() != chunks {
                return false;
            }
            let bases = st.params.bases(*i as i64);
            for ((base, xj), c) in bases.iter().zip(chunk_values(x, st.params.chunk_bits(), chunks)).zip(&block.chunks) {
                expected.push(G1Projective::from(base) * w.sk + st.params.g1_small(xj));
                received.push(*c);
            }
        }
        Bls12::normalize_g1(&expected) == received
    }

    fn encode_witness(w: &MaskWitness) -> Vec<u8> {
        let mut out = Vec::with_capacity(36 + 32 * w.x.len());
        out.extend_from_slice(&w.sk.to_bytes_le());
        out.extend_from_slice(&(w.x.len() as u32).to_le_bytes());
        for x in &w.x {
            out.extend_from_slice(&x.to_bytes_le());
        }
        out
    }

    fn decode_witness(mut bytes: &[u8]) -> Result<MaskWitness> {
        let sk = scalar_from_bytes(take(&mut bytes, 32)?)?;
        let n = u32::from_le_bytes(take(&mut bytes, 4)?.try_into().unwrap()) as usize;
        if bytes.len() != 32 * n {
            return Err(Error::encoding("bad witness length"));
        }
        let x = bytes.chunks(32).map(scalar_from_bytes).collect::<Result<_>>()?;
        Ok(MaskWitness { sk, x })
    }
}

pub type MaskBackend = dyn ConsistencyBackend<MaskRelation>;

#[derive(Clone, Debug, PartialEq)]
pub struct StarProof {
    pub backend: BackendId,
    pub pi_z: Vec<u8>,
    pub pi_r: ConsistencyProof,
    /// ElGamal encryptions at the sampled positions.
    pub ct_prime: ChunkedCiphertext,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StarBundle {
    pub header: StarHeader,
    pub vk: VerificationKey,
    pub masked: Vec<Scalar>,
    pub proof: StarProof,
}

/// Output of the masking pass, before any proof.
pub struct StarMasking {
    pub header: StarHeader,
    pub keypair: Keypair,
    codeword: Vec<Scalar>,
    masked: Vec<Scalar>,
    masked_digest: [u8; 32],
}

fn masked_digest(masked: &[Scalar]) -> [u8; 32] {
    let mut h = Sha256::new();
    for s in masked {
        h.update(s.to_bytes_le());
    }
    h.finalize().into()
}

/// Extends the file to `m` symbols and masks all of them under a fresh key.
pub fn star_mask(params: &VeckParams, cfg: &StarConfig, file: &CommittedFile, rng: &mut impl RngCore) -> Result<StarMasking> {
    let header = cfg.header(file.ell(), params.chunk_bits())?;
    let keypair = Keypair::generate(params, rng);
    let codeword = extend_consecutive(file.evals(), header.m as usize)?;
    let stream = mask_stream(cfg.mask, &keypair.sk, 0..header.m);
    let masked: Vec<Scalar> = codeword.iter().zip(&stream).map(|(c, h)| *c + h).collect();
    let masked_digest = masked_digest(&masked);
    Ok(StarMasking { header, keypair, codeword, masked, masked_digest })
}

fn statement(crs: &Crs, header: &StarHeader, c_phi: &G1Affine, vk: &VerificationKey, digest: &[u8; 32]) -> Transcript {
    let mut t = Transcript::new(b"fde/veck-star");
    t.append(b"crs", &crs.digest());
    let mut h = Vec::new();
    header.write(&mut h);
    t.append(b"header", &h);
    t.append(b"c-phi", &c_phi.to_compressed());
    t.append(b"vk", &vk.to_bytes());
    t.append(b"masked", digest);
    t
}

fn sample(t: &mut Transcript, header: &StarHeader) -> Result<Vec<u64>> {
    let seed = t.challenge_bytes(b"sample-seed");
    Ok(derive_subset(&seed, header.m as usize, header.sample_len as usize)?
        .into_iter()
        .map(|i| i as u64)
        .collect())
}

impl StarMasking {
    pub fn masked(&self) -> &[Scalar] {
        &self.masked
    }

    /// Adds `delta` to one masked symbol before proving, as a dishonest
    /// prover would.
    pub fn corrupt(&mut self, position: usize, delta: Scalar) -> Result<()> {
        let slot = self.masked.get_mut(position).ok_or_else(|| Error::domain("position outside the codeword"))?;
        *slot += delta;
        self.masked_digest = masked_digest(&self.masked);
        Ok(())
    }

    /// Derives `S_R`, encrypts the sample under the outer key and proves
    /// both layers.
    pub fn prove(
        self,
        crs: &Crs,
        params: &VeckParams,
        file: &CommittedFile,
        backend: &MaskBackend,
        rng: &mut impl RngCore,
    ) -> Result<(StarBundle, Keypair)> {
        let c_phi = file.commitment();
        let mut t = statement(crs, &self.header, &c_phi, &self.keypair.public, &self.masked_digest);
        let sample = sample(&mut t, &self.header)?;
        let x: Vec<Scalar> = sample.iter().map(|i| self.codeword[*i as usize]).collect();
        let ct_prime = enc1(params, &sample, &x, &self.keypair)?;
        let pi_r = enc2(params, crs, &sample, &c_phi, file.poly(), &ct_prime, &self.keypair, &mut t, rng)?;
        let masked_at: Vec<Scalar> = sample.iter().map(|i| self.masked[*i as usize]).collect();
        let st = MaskStatement {
            params,
            mask: self.header.mask,
            vk: &self.keypair.public,
            sample: &sample,
            masked: &masked_at,
            ct: &ct_prime,
        };
        let pi_z = backend.prove(&st, &MaskWitness { sk: self.keypair.sk, x })?;
        let proof = StarProof { backend: backend.id(), pi_z, pi_r, ct_prime };
        let bundle = StarBundle { header: self.header, vk: self.keypair.public, masked: self.masked, proof };
        Ok((bundle, self.keypair))
    }
}

pub fn star_enc(
    crs: &Crs,
    params: &VeckParams,
    cfg: &StarConfig,
    file: &CommittedFile,
    backend: &MaskBackend,
    rng: &mut impl RngCore,
) -> Result<(StarBundle, Keypair)> {
    star_mask(params, cfg, file, rng)?.prove(crs, params, file, backend, rng)
}

/// Verifies a bundle for a committed file of `ell + 1` symbols: `b1` is the
/// ElGamal consistency proof on `S_R`, `b2` the backend proof.
#[allow(clippy::too_many_arguments)]
pub fn star_ver(
    crs: &Crs,
    params: &VeckParams,
    cfg: &StarConfig,
    ell: usize,
    c_phi: &G1Affine,
    bundle: &StarBundle,
    backend: &MaskBackend,
    rng: &mut impl RngCore,
) -> Verdict {
    match cfg.header(ell, params.chunk_bits()) {
        Ok(h) if h == bundle.header => {}
        _ => return Verdict::Reject(Rejection::ParamsMismatch),
    }
    if bundle.masked.len() as u64 != bundle.header.m {
        return Verdict::Reject(Rejection::Malformed);
    }
    let mut t = statement(crs, &bundle.header, c_phi, &bundle.vk, &masked_digest(&bundle.masked));
    let Ok(sample) = sample(&mut t, &bundle.header) else {
        return Verdict::Reject(Rejection::Malformed);
    };
    let ct = &bundle.proof.ct_prime;
    if ct.len() != sample.len() || ct.blocks().iter().zip(&sample).any(|(b, i)| b.index != *i) {
        return Verdict::Reject(Rejection::Malformed);
    }

    let b1 = ver_ct(params, crs, &sample, c_phi, &bundle.vk, ct, &bundle.proof.pi_r, &mut t, rng);
    b1.and(|| {
        if bundle.proof.backend != backend.id() {
            return Verdict::Reject(Rejection::BackendUnavailable);
        }
        let masked_at: Vec<Scalar> = sample.iter().map(|i| bundle.masked[*i as usize]).collect();
        let st = MaskStatement { params, mask: bundle.header.mask, vk: &bundle.vk, sample: &sample, masked: &masked_at, ct };
        match backend.verify(&st, &bundle.proof.pi_z) {
            Ok(true) => Verdict::Accept,
            Ok(false) => Verdict::Reject(Rejection::MaskConsistency),
            Err(_) => Verdict::Reject(Rejection::BackendUnavailable),
        }
    })
}

/// Unmasks every symbol and recovers the message at `targets`.
pub fn star_dec(
    header: &StarHeader,
    sk: &Scalar,
    masked: &[Scalar],
    targets: &[u64],
    rng: &mut impl RngCore,
) -> Result<Recovery> {
    let code = header.code()?;
    if masked.len() != code.m {
        return Err(Error::domain("masked word has the wrong length"));
    }
    let stream = mask_stream(header.mask, sk, 0..header.m);
    let symbols = masked.iter().zip(&stream).map(|(c, h)| Some(*c - h)).collect();
    detect_then_correct(&code, &Codeword { symbols }, targets, rng)
}

fn section(out: &mut Vec<u8>, tag: u8, body: &[u8]) {
    out.push(tag);
    out.extend_from_slice(&(body.len() as u32).to_le_bytes());
    out.extend_from_slice(body);
}

fn read_u32(cur: &mut &[u8]) -> Result<usize> {
    Ok(u32::from_le_bytes(take(cur, 4)?.try_into().unwrap()) as usize)
}

impl StarProof {
    pub fn to_bytes(&self) -> Vec<u8> {
        let pi_r = self.pi_r.to_bytes();
        let mut out = vec![self.backend as u8];
        out.extend_from_slice(&(self.pi_z.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.pi_z);
        out.extend_from_slice(&(pi_r.len() as u32).to_le_bytes());
        out.extend_from_slice(&pi_r);
        out.extend_from_slice(&self.ct_prime.to_bytes());
        out
    }

    pub fn from_bytes(mut cur: &[u8]) -> Result<Self> {
        let backend = BackendId::try_from(take(&mut cur, 1)?[0])?;
        let n = read_u32(&mut cur)?;
        let pi_z = take(&mut cur, n)?.to_vec();
        let n = read_u32(&mut cur)?;
        let pi_r = ConsistencyProof::from_bytes(take(&mut cur, n)?)?;
        let ct_prime = ChunkedCiphertext::from_bytes(cur)?;
        Ok(Self { backend, pi_z, pi_r, ct_prime })
    }
}

impl StarBundle {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = BUNDLE_MAGIC.to_vec();
        let mut h = Vec::with_capacity(StarHeader::ENCODED_LEN);
        self.header.write(&mut h);
        section(&mut out, TAG_PARAMS, &h);
        section(&mut out, TAG_VK, &self.vk.to_bytes());
        let mut masked = Vec::with_capacity(32 * self.masked.len());
        for s in &self.masked {
            masked.extend_from_slice(&s.to_bytes_le());
        }
        section(&mut out, TAG_MASKED, &masked);
        section(&mut out, TAG_PROOF, &self.proof.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = bytes;
        if take(&mut cur, BUNDLE_MAGIC.len())? != BUNDLE_MAGIC {
            return Err(Error::encoding("not a VECK* bundle"));
        }
        let mut body = |tag: u8| -> Result<&[u8]> {
            if take(&mut cur, 1)?[0] != tag {
                return Err(Error::encoding(format!("expected section {tag}")));
            }
            let n = read_u32(&mut cur)?;
            take(&mut cur, n)
        };
        let header = StarHeader::read(body(TAG_PARAMS)?)?;
        let vk = VerificationKey::from_bytes(body(TAG_VK)?)?;
        let raw = body(TAG_MASKED)?;
        let proof = StarProof::from_bytes(body(TAG_PROOF)?)?;
        if !cur.is_empty() || raw.len() % 32 != 0 {
            return Err(Error::encoding("trailing bytes in bundle"));
        }
        let masked = raw.chunks(32).map(scalar_from_bytes).collect::<Result<_>>()?;
        Ok(Self { header, vk, masked, proof })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rscode::Decoding;
    use crate::veck::backend::{SessionMode, TransparentBackend};
    use crate::veck::counters;
    use crate::veck::elgamal::{dec, DlogTable};
    use crate::veck::recovery::DecodePath;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    const CFG: StarConfig = StarConfig { lambda: 8, beta: 2.0, mask: MaskHash::Sha256 };

    struct Setup {
        crs: Crs,
        params: VeckParams,
        file: CommittedFile,
        backend: TransparentBackend,
        rng: ChaCha20Rng,
    }

    fn setup(len: usize) -> Setup {
        let mut rng = ChaCha20Rng::seed_from_u64(100 + len as u64);
        let crs = Crs::setup(len.max(16), &mut rng).unwrap();
        let params = VeckParams::new(b"star-tests", 8).unwrap();
        let evals = (0..len).map(|_| Scalar::random(&mut rng)).collect();
        let file = CommittedFile::new(&crs, evals).unwrap();
        Setup { crs, params, file, backend: TransparentBackend::new(SessionMode::TestOnly), rng }
    }

    #[test]
    fn mask_stream_properties() {
        let sk = Scalar::from(1234u64);
        for hash in [MaskHash::Sha256, MaskHash::Algebraic] {
            let a = mask_stream(hash, &sk, 0..1000);
            assert_eq!(a, mask_stream(hash, &sk, 0..1000));
            assert_eq!(a[500..510], mask_stream(hash, &sk, 500..510)[..]);
            let b = mask_stream(hash, &(sk + Scalar::ONE), 0..1000);
            assert_eq!(a.iter().zip(&b).filter(|(x, y)| x == y).count(), 0);
            let distinct: std::collections::HashSet<_> = a.iter().map(|s| s.to_bytes_le()).collect();
            assert_eq!(distinct.len(), 1000);
        }
        assert_ne!(mask_stream(MaskHash::Sha256, &sk, 0..1), mask_stream(MaskHash::Algebraic, &sk, 0..1));
    }

    #[test]
    fn honest_roundtrip_and_two_layers() {
        let mut s = setup(30);
        let c = s.file.commitment();
        let (bundle, kp) = star_enc(&s.crs, &s.params, &CFG, &s.file, &s.backend, &mut s.rng).unwrap();
        assert_eq!(bundle.masked.len(), 60);
        assert_eq!(star_ver(&s.crs, &s.params, &CFG, 29, &c, &bundle, &s.backend, &mut s.rng), Verdict::Accept);
        let wire = StarBundle::from_bytes(&bundle.to_bytes()).unwrap();
        assert_eq!(wire, bundle);

        // Unmasked sample equals the ElGamal layer.
        let table = DlogTable::new(8);
        let inner = dec(&s.params, &table, &kp.sk, &bundle.proof.ct_prime).unwrap();
        for (block, v) in bundle.proof.ct_prime.blocks().iter().zip(inner) {
            let i = block.index;
            let unmasked = bundle.masked[i as usize] - mask_stream(CFG.mask, &kp.sk, i..i + 1)[0];
            assert_eq!(Some(unmasked), v);
        }

        counters::reset();
        let targets: Vec<u64> = (0..30).collect();
        let out = star_dec(&bundle.header, &kp.sk, &bundle.masked, &targets, &mut s.rng).unwrap();
        assert_eq!(counters::chunk_ops(), 0);
        assert_eq!(out.path, DecodePath::Fast);
        assert_eq!(out.decoding, Decoding::Recovered(s.file.evals().to_vec()));
    }

    /// Encodes any witness without checking it, as a cheating prover would.
    struct Unchecked;

    impl ConsistencyBackend<MaskRelation> for Unchecked {
        fn id(&self) -> BackendId {
            BackendId::Transparent
        }
        fn prove(&self, _: &MaskStatement<'_>, w: &MaskWitness) -> Result<Vec<u8>> {
            Ok(MaskRelation::encode_witness(w))
        }
        fn verify(&self, _: &MaskStatement<'_>, _: &[u8]) -> Result<bool> {
            Ok(true)
        }
    }

    #[test]
    fn masked_tampering() {
        let mut s = setup(40);
        let c = s.file.commitment();
        let (bundle, _) = star_enc(&s.crs, &s.params, &CFG, &s.file, &s.backend, &mut s.rng).unwrap();

        // Changing the masked word after proving moves the sample.
        let mut b = bundle.clone();
        let first = b.proof.ct_prime.blocks()[0].index as usize;
        b.masked[first] += Scalar::ONE;
        assert!(!star_ver(&s.crs, &s.params, &CFG, 39, &c, &b, &s.backend, &mut s.rng).is_accept());

        // Corruption before proving: caught by the backend proof when
        // sampled, corrected after purchase otherwise.
        let (mut caught, mut corrected) = (0, 0);
        for pos in 0..80u64 {
            let mut masking = star_mask(&s.params, &CFG, &s.file, &mut s.rng).unwrap();
            masking.corrupt(pos as usize, Scalar::ONE).unwrap();
            let (b, kp) = masking.prove(&s.crs, &s.params, &s.file, &Unchecked, &mut s.rng).unwrap();
            let v = star_ver(&s.crs, &s.params, &CFG, 39, &c, &b, &s.backend, &mut s.rng);
            if b.proof.ct_prime.get(pos).is_some() {
                assert_eq!(v, Verdict::Reject(Rejection::MaskConsistency));
                caught += 1;
            } else {
                assert_eq!(v, Verdict::Accept);
                let targets: Vec<u64> = (0..40).collect();
                let out = star_dec(&b.header, &kp.sk, &b.masked, &targets, &mut s.rng).unwrap();
                assert_eq!(out.path, DecodePath::Corrected);
                assert_eq!(out.decoding, Decoding::Recovered(s.file.evals().to_vec()));
                corrected += 1;
            }
            if caught > 0 && corrected > 2 {
                break;
            }
        }
        assert!(caught > 0 && corrected > 0);
    }

    #[test]
    fn backend_clauses() {
        let mut s = setup(20);
        let c = s.file.commitment();
        let (bundle, kp) = star_enc(&s.crs, &s.params, &CFG, &s.file, &s.backend, &mut s.rng).unwrap();
        let mut w = MaskRelation::decode_witness(&bundle.proof.pi_z).unwrap();
        assert_eq!(w.sk, kp.sk);
        let check = |s: &mut Setup, pi_z: Vec<u8>| {
            let mut b = bundle.clone();
            b.proof.pi_z = pi_z;
            star_ver(&s.crs, &s.params, &CFG, 19, &c, &b, &s.backend, &mut s.rng)
        };
        w.x[0] += Scalar::ONE;
        assert_eq!(check(&mut s, MaskRelation::encode_witness(&w)), Verdict::Reject(Rejection::MaskConsistency));
        w.x[0] -= Scalar::ONE;
        w.sk += Scalar::ONE;
        assert_eq!(check(&mut s, MaskRelation::encode_witness(&w)), Verdict::Reject(Rejection::MaskConsistency));

        let prod = TransparentBackend::new(SessionMode::Production);
        let v = star_ver(&s.crs, &s.params, &CFG, 19, &c, &bundle, &prod, &mut s.rng);
        assert_eq!(v, Verdict::Reject(Rejection::BackendUnavailable));
        assert!(matches!(
            star_enc(&s.crs, &s.params, &CFG, &s.file, &prod, &mut s.rng),
            Err(Error::TestOnlyBackend)
        ));

        let other = StarConfig { mask: MaskHash::Algebraic, ..CFG };
        let v = star_ver(&s.crs, &s.params, &other, 19, &c, &bundle, &s.backend, &mut s.rng);
        assert_eq!(v, Verdict::Reject(Rejection::ParamsMismatch));
    }

    #[test]
    fn algebraic_mask_roundtrip() {
        let mut s = setup(10);
        let cfg = StarConfig { mask: MaskHash::Algebraic, ..CFG };
        let c = s.file.commitment();
        let (bundle, kp) = star_enc(&s.crs, &s.params, &cfg, &s.file, &s.backend, &mut s.rng).unwrap();
        assert!(star_ver(&s.crs, &s.params, &cfg, 9, &c, &bundle, &s.backend, &mut s.rng).is_accept());
        let out = star_dec(&bundle.header, &kp.sk, &bundle.masked, &[0, 9], &mut s.rng).unwrap();
        assert_eq!(out.decoding, Decoding::Recovered(vec![s.file.evals()[0], s.file.evals()[9]]));
    }

    #[test]
    fn all_zero_file() {
        let mut s = setup(8);
        let zero = CommittedFile::new(&s.crs, vec![Scalar::ZERO; 8]).unwrap();
        let (bundle, kp) = star_enc(&s.crs, &s.params, &CFG, &zero, &s.backend, &mut s.rng).unwrap();
        let stream = mask_stream(CFG.mask, &kp.sk, 0..bundle.header.m);
        assert_eq!(bundle.masked, stream);
        let out = star_dec(&bundle.header, &kp.sk, &bundle.masked, &[0, 3], &mut s.rng).unwrap();
        assert_eq!(out.path, DecodePath::Fast);
        assert_eq!(out.decoding, Decoding::Recovered(vec![Scalar::ZERO; 2]));
    }
}
