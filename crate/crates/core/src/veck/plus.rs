//! Every code symbol encrypted, consistency proven on a sample.
//!
//! The server Reed-Solomon extends the file to `m` symbols, encrypts all of
//! them under a fresh key and proves consistency only on a Fiat-Shamir
//! sample `S_R` drawn from `0..m`. Corruption outside the sample is left to
//! the decoder. In the subset case the server instead encrypts a blinded
//! polynomial `phi'_S` that agrees with `phi` on the purchased set `S`.

use blstrs::{G1Affine, G1Projective, G2Affine, Scalar};
use ff::Field;
use group::Curve;
use rand::RngCore;

use super::committed::CommittedFile;
use super::consistency::{enc2, ver_ct, ConsistencyProof};
use super::elgamal::{dec, decode_g1, decode_g2, enc1, take, ChunkedCiphertext, DlogTable, Keypair, VerificationKey};
use super::params::VeckParams;
use super::recovery::{detect_then_correct, Recovery};
use super::{sample_size, Rejection, Verdict};
use crate::algebra::{derive_subset, extend_consecutive, vanishing, Polynomial, Transcript};
use crate::kzg::{self, Bls12, Crs, PairingBackend};
use crate::rscode::{CodeParams, Codeword};
use crate::{Error, Result};

pub const BUNDLE_MAGIC: &[u8; 6] = b"FDEV+1";

const TAG_PARAMS: u8 = 1;
const TAG_VK: u8 = 2;
const TAG_CT: u8 = 3;
const TAG_PROOF: u8 = 4;
const TAG_SUBSET: u8 = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlusConfig {
    /// Statistical security of the sample.
    pub lambda: usize,
    /// Code expansion rate.
    pub beta: f64,
}

impl Default for PlusConfig {
    fn default() -> Self {
        Self { lambda: crate::SECURITY_BITS, beta: 2.0 }
    }
}

impl PlusConfig {
    /// Header for a code carrying `ell + 1` symbols.
    pub fn header(&self, ell: usize, chunk_bits: u32) -> Result<PlusHeader> {
        let code = CodeParams::new(ell, self.beta)?;
        Ok(PlusHeader {
            lambda: self.lambda as u32,
            beta: self.beta,
            chunk_bits,
            ell: ell as u64,
            m: code.m as u64,
            sample_len: sample_size(ell + 1, self.lambda, self.beta) as u64,
        })
    }
}

/// Parameters echoed in a bundle. In the subset case `ell` is `|S|`, the
/// degree of the blinded polynomial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlusHeader {
    pub lambda: u32,
    pub beta: f64,
    pub chunk_bits: u32,
    pub ell: u64,
    pub m: u64,
    pub sample_len: u64,
}

impl PlusHeader {
    pub const ENCODED_LEN: usize = 4 + 8 + 4 + 8 + 8 + 8;

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
        out.extend_from_slice(&self.ell.to_le_bytes());
        out.extend_from_slice(&self.m.to_le_bytes());
        out.extend_from_slice(&self.sample_len.to_le_bytes());
    }

    fn read(mut bytes: &[u8]) -> Result<Self> {
        if bytes.len() != Self::ENCODED_LEN {
            return Err(Error::encoding("bad parameter section"));
        }
        let u32_at = |b: &mut &[u8]| -> Result<u32> { Ok(u32::from_le_bytes(take(b, 4)?.try_into().unwrap())) };
        let u64_at = |b: &mut &[u8]| -> Result<u64> { Ok(u64::from_le_bytes(take(b, 8)?.try_into().unwrap())) };
        Ok(Self {
            lambda: u32_at(&mut bytes)?,
            beta: f64::from_bits(u64_at(&mut bytes)?),
            chunk_bits: u32_at(&mut bytes)?,
            ell: u64_at(&mut bytes)?,
            m: u64_at(&mut bytes)?,
            sample_len: u64_at(&mut bytes)?,
        })
    }
}

/// Proof that a G2 element commits to `V_S`, checked at a transcript point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VanishingOpening {
    pub commitment: G2Affine,
    pub proof: G2Affine,
}

/// Opening of `phi - phi'_S` to zero on the purchased set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubsetOpening {
    /// `C_S`, the commitment to `phi'_S`.
    pub commitment: G1Affine,
    pub proof: G1Affine,
    pub vanishing: Option<VanishingOpening>,
}

/// Server-side state of a subset sale.
#[derive(Clone, Debug)]
pub struct SubsetContext {
    pub s: Vec<u64>,
    pub t: Scalar,
    pub poly: Polynomial,
    pub commitment: G1Affine,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VeckPlusBundle {
    pub header: PlusHeader,
    pub vk: VerificationKey,
    pub ct: ChunkedCiphertext,
    pub subset: Option<SubsetOpening>,
    pub proof: ConsistencyProof,
}

/// Output of the bulk encryption step, before any proof.
pub struct PlusEncryption {
    pub header: PlusHeader,
    pub keypair: Keypair,
    pub ct: ChunkedCiphertext,
    pub subset: Option<SubsetContext>,
}

fn encrypt_code(
    params: &VeckParams,
    header: PlusHeader,
    data: &[Scalar],
    keypair: Keypair,
    subset: Option<SubsetContext>,
) -> Result<PlusEncryption> {
    let code = header.code()?;
    let word = extend_consecutive(data, code.m)?;
    let indices: Vec<u64> = (0..code.m as u64).collect();
    let ct = enc1(params, &indices, &word, &keypair)?;
    ct.digest();
    Ok(PlusEncryption { header, keypair, ct, subset })
}

/// Encrypts the whole RS-extended file under a fresh key.
pub fn plus_encrypt_full(
    params: &VeckParams,
    cfg: &PlusConfig,
    file: &CommittedFile,
    rng: &mut impl RngCore,
) -> Result<PlusEncryption> {
    let header = cfg.header(file.ell(), params.chunk_bits())?;
    let keypair = Keypair::generate(params, rng);
    encrypt_code(params, header, file.evals(), keypair, None)
}

fn check_subset(s: &[u64], ell: usize) -> Result<()> {
    if s.is_empty() || s.windows(2).any(|w| w[0] >= w[1]) || s.iter().any(|i| *i as usize > ell) {
        return Err(Error::domain("subset must be a nonempty ascending subset of the file positions"));
    }
    Ok(())
}

/// Blinds `phi` on `S` and encrypts the RS extension of `phi'_S`.
pub fn plus_encrypt_subset(
    crs: &Crs,
    params: &VeckParams,
    cfg: &PlusConfig,
    file: &CommittedFile,
    s: &[u64],
    rng: &mut impl RngCore,
) -> Result<PlusEncryption> {
    check_subset(s, file.ell())?;
    let points: Vec<Scalar> = s.iter().map(|i| Scalar::from(*i)).collect();
    let v = vanishing(&points);
    let (_, r) = file.poly().div_rem(&v)?;
    let t = Scalar::random(&mut *rng);
    let poly = &r + &v.scale(&t);
    let commitment = kzg::commit(crs, &poly)?;
    let data: Vec<Scalar> = (0..=s.len() as u64).map(|i| poly.eval(&Scalar::from(i))).collect();
    let header = cfg.header(s.len(), params.chunk_bits())?;
    let keypair = Keypair::generate(params, rng);
    let ctx = SubsetContext { s: s.to_vec(), t, poly, commitment };
    encrypt_code(params, header, &data, keypair, Some(ctx))
}

fn statement(crs: &Crs, header: &PlusHeader, c_phi: &G1Affine, vk: &VerificationKey, ct: &ChunkedCiphertext) -> Transcript {
    statement_for_digest(crs, header, c_phi, vk, &ct.digest())
}

fn statement_for_digest(
    crs: &Crs,
    header: &PlusHeader,
    c_phi: &G1Affine,
    vk: &VerificationKey,
    ct_digest: &[u8; 32],
) -> Transcript {
    let mut t = Transcript::new(b"fde/veck-plus");
    t.append(b"crs", &crs.digest());
    let mut h = Vec::new();
    header.write(&mut h);
    t.append(b"header", &h);
    t.append(b"c-phi", &c_phi.to_compressed());
    t.append(b"vk", &vk.to_bytes());
    t.append(b"ct", ct_digest);
    t
}

/// The full-file sample `S_R` for a ciphertext with the given digest.
pub fn full_sample(
    crs: &Crs,
    header: &PlusHeader,
    c_phi: &G1Affine,
    vk: &VerificationKey,
    ct_digest: &[u8; 32],
) -> Result<Vec<u64>> {
    sample(&mut statement_for_digest(crs, header, c_phi, vk, ct_digest), header)
}

fn absorb_subset_head(t: &mut Transcript, s: &[u64], opening: &SubsetOpening) {
    t.append(b"subset", &s.iter().flat_map(|i| i.to_le_bytes()).collect::<Vec<_>>());
    t.append(b"c-s", &opening.commitment.to_compressed());
    t.append(b"pi-s", &opening.proof.to_compressed());
}

fn sample(t: &mut Transcript, header: &PlusHeader) -> Result<Vec<u64>> {
    let seed = t.challenge_bytes(b"sample-seed");
    Ok(derive_subset(&seed, header.m as usize, header.sample_len as usize)?
        .into_iter()
        .map(|i| i as u64)
        .collect())
}

impl PlusEncryption {
    /// Derives `S_R` and builds the proofs. In the subset case
    /// `vanishing_opening` additionally ships `g2^{V_S(tau)}` with an
    /// opening, so a verifier can skip the G2 combination.
    pub fn prove(
        self,
        crs: &Crs,
        params: &VeckParams,
        file: &CommittedFile,
        vanishing_opening: bool,
        rng: &mut impl RngCore,
    ) -> Result<(VeckPlusBundle, Keypair)> {
        let mut t = statement(crs, &self.header, &file.commitment(), &self.keypair.public, &self.ct);
        let (subset, target, poly) = match &self.subset {
            None => (None, file.commitment(), file.poly()),
            Some(ctx) => {
                let points: Vec<Scalar> = ctx.s.iter().map(|i| Scalar::from(*i)).collect();
                let v = vanishing(&points);
                let (q, _) = file.poly().div_rem(&v)?;
                let g1 = G1Projective::from(VeckParams::g1());
                let proof = (G1Projective::from(kzg::commit(crs, &q)?) - g1 * ctx.t).to_affine();
                let mut opening = SubsetOpening { commitment: ctx.commitment, proof, vanishing: None };
                absorb_subset_head(&mut t, &ctx.s, &opening);
                if vanishing_opening {
                    let commitment = kzg::commit_g2(crs, &v)?;
                    t.append(b"c-v", &commitment.to_compressed());
                    let kappa: Scalar = t.challenge_scalar(b"v-point");
                    let (_, proof) = kzg::open_g2(crs, &v, &kappa)?;
                    t.append(b"pi-v", &proof.to_compressed());
                    opening.vanishing = Some(VanishingOpening { commitment, proof });
                }
                (Some(opening), ctx.commitment, &ctx.poly)
            }
        };
        let sample = sample(&mut t, &self.header)?;
        let proof = enc2(params, crs, &sample, &target, poly, &self.ct, &self.keypair, &mut t, rng)?;
        let bundle = VeckPlusBundle { header: self.header, vk: self.keypair.public, ct: self.ct, subset, proof };
        Ok((bundle, self.keypair))
    }
}

pub fn plus_enc_full(
    crs: &Crs,
    params: &VeckParams,
    cfg: &PlusConfig,
    file: &CommittedFile,
    rng: &mut impl RngCore,
) -> Result<(VeckPlusBundle, Keypair)> {
    plus_encrypt_full(params, cfg, file, rng)?.prove(crs, params, file, false, rng)
}

pub fn plus_enc_subset(
    crs: &Crs,
    params: &VeckParams,
    cfg: &PlusConfig,
    file: &CommittedFile,
    s: &[u64],
    vanishing_opening: bool,
    rng: &mut impl RngCore,
) -> Result<(VeckPlusBundle, Keypair)> {
    plus_encrypt_subset(crs, params, cfg, file, s, rng)?.prove(crs, params, file, vanishing_opening, rng)
}

fn check_shape(bundle: &VeckPlusBundle, expected: &PlusHeader) -> Option<Rejection> {
    if bundle.header != *expected {
        return Some(Rejection::ParamsMismatch);
    }
    let blocks = bundle.ct.blocks();
    if blocks.len() as u64 != expected.m || blocks.iter().enumerate().any(|(i, b)| b.index != i as u64) {
        return Some(Rejection::Malformed);
    }
    None
}

/// Verifies a full-file bundle for a committed file of `ell + 1` symbols.
#[allow(clippy::too_many_arguments)]
pub fn plus_ver_full(
    crs: &Crs,
    params: &VeckParams,
    cfg: &PlusConfig,
    ell: usize,
    c_phi: &G1Affine,
    bundle: &VeckPlusBundle,
    rng: &mut impl RngCore,
) -> Verdict {
    let expected = match cfg.header(ell, params.chunk_bits()) {
        Ok(h) => h,
        Err(_) => return Verdict::Reject(Rejection::ParamsMismatch),
    };
    if let Some(r) = check_shape(bundle, &expected) {
        return Verdict::Reject(r);
    }
    if bundle.subset.is_some() {
        return Verdict::Reject(Rejection::Malformed);
    }
    let mut t = statement(crs, &bundle.header, c_phi, &bundle.vk, &bundle.ct);
    let Ok(sample) = sample(&mut t, &bundle.header) else {
        return Verdict::Reject(Rejection::Malformed);
    };
    ver_ct(params, crs, &sample, c_phi, &bundle.vk, &bundle.ct, &bundle.proof, &mut t, rng)
}

/// Verifies a subset bundle for the purchased set `s`.
///
/// With `precomputed = Some(g2^{V_S(tau)})` nothing depends on `|S|`
/// beyond hashing it. Otherwise a shipped vanishing opening is checked in
/// `O(|S|)` field operations, and failing that `g2^{V_S(tau)}` is
/// recombined from the reference string.
#[allow(clippy::too_many_arguments)]
pub fn plus_ver_subset(
    crs: &Crs,
    params: &VeckParams,
    cfg: &PlusConfig,
    c_phi: &G1Affine,
    s: &[u64],
    bundle: &VeckPlusBundle,
    precomputed: Option<&G2Affine>,
    rng: &mut impl RngCore,
) -> Verdict {
    let expected = match cfg.header(s.len(), params.chunk_bits()) {
        Ok(h) => h,
        Err(_) => return Verdict::Reject(Rejection::ParamsMismatch),
    };
    if let Some(r) = check_shape(bundle, &expected) {
        return Verdict::Reject(r);
    }
    let Some(opening) = &bundle.subset else {
        return Verdict::Reject(Rejection::Malformed);
    };
    if s.is_empty() || s.len() > crs.max_degree() {
        return Verdict::Reject(Rejection::Malformed);
    }

    let mut t = statement(crs, &bundle.header, c_phi, &bundle.vk, &bundle.ct);
    absorb_subset_head(&mut t, s, opening);
    let mut shipped = None;
    if let Some(v) = &opening.vanishing {
        t.append(b"c-v", &v.commitment.to_compressed());
        let kappa: Scalar = t.challenge_scalar(b"v-point");
        t.append(b"pi-v", &v.proof.to_compressed());
        shipped = Some((v, kappa));
    }

    let v_tau = match (precomputed, shipped) {
        (Some(p), _) => *p,
        (None, Some((v, kappa))) => {
            let value: Scalar = s.iter().map(|i| kappa - Scalar::from(*i)).product();
            if !kzg::verify_g2(crs, &v.commitment, &kappa, &value, &v.proof) {
                return Verdict::Reject(Rejection::VanishingOpening);
            }
            v.commitment
        }
        (None, None) => {
            let points: Vec<Scalar> = s.iter().map(|i| Scalar::from(*i)).collect();
            Bls12::msm_g2(crs.g2_powers(), vanishing(&points).coeffs()).to_affine()
        }
    };
    let diff = (G1Projective::from(c_phi) - G1Projective::from(opening.commitment)).to_affine();
    if !Bls12::pairing_product_is_one(&[(diff, VeckParams::g2()), (-opening.proof, v_tau)]) {
        return Verdict::Reject(Rejection::SubsetOpening);
    }

    let Ok(sample) = sample(&mut t, &bundle.header) else {
        return Verdict::Reject(Rejection::Malformed);
    };
    ver_ct(params, crs, &sample, &opening.commitment, &bundle.vk, &bundle.ct, &bundle.proof, &mut t, rng)
}

/// Decrypts every position and recovers the message at `targets`.
/// Positions that fail to decrypt become erasures.
pub fn plus_dec(
    params: &VeckParams,
    table: &DlogTable,
    sk: &Scalar,
    header: &PlusHeader,
    ct: &ChunkedCiphertext,
    targets: &[u64],
    rng: &mut impl RngCore,
) -> Result<Recovery> {
    let code = header.code()?;
    let mut symbols = vec![None; code.m];
    let plain = dec(params, table, sk, ct)?;
    for (block, value) in ct.blocks().iter().zip(plain) {
        if let Some(slot) = symbols.get_mut(block.index as usize) {
            *slot = value;
        }
    }
    detect_then_correct(&code, &Codeword { symbols }, targets, rng)
}

fn section(out: &mut Vec<u8>, tag: u8, body: &[u8]) {
    out.push(tag);
    out.extend_from_slice(&(body.len() as u32).to_le_bytes());
    out.extend_from_slice(body);
}

impl VeckPlusBundle {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = BUNDLE_MAGIC.to_vec();
        let mut h = Vec::with_capacity(PlusHeader::ENCODED_LEN);
        self.header.write(&mut h);
        section(&mut out, TAG_PARAMS, &h);
        section(&mut out, TAG_VK, &self.vk.to_bytes());
        section(&mut out, TAG_CT, &self.ct.to_bytes());
        section(&mut out, TAG_PROOF, &self.proof.to_bytes());
        if let Some(o) = &self.subset {
            let mut body = Vec::with_capacity(1 + 2 * 48 + 2 * 96);
            body.extend_from_slice(&o.commitment.to_compressed());
            body.extend_from_slice(&o.proof.to_compressed());
            if let Some(v) = &o.vanishing {
                body.extend_from_slice(&v.commitment.to_compressed());
                body.extend_from_slice(&v.proof.to_compressed());
            }
            section(&mut out, TAG_SUBSET, &body);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = bytes;
        if take(&mut cur, BUNDLE_MAGIC.len())? != BUNDLE_MAGIC {
            return Err(Error::encoding("not a VECK+ bundle"));
        }
        let mut sections: [Option<&[u8]>; 6] = [None; 6];
        while !cur.is_empty() {
            let tag = take(&mut cur, 1)?[0] as usize;
            let len = u32::from_le_bytes(take(&mut cur, 4)?.try_into().unwrap()) as usize;
            let body = take(&mut cur, len)?;
            match sections.get_mut(tag) {
                Some(slot @ None) if tag != 0 => *slot = Some(body),
                _ => return Err(Error::encoding(format!("unexpected section {tag}"))),
            }
        }
        let need = |tag: u8| sections[tag as usize].ok_or_else(|| Error::encoding(format!("missing section {tag}")));
        let header = PlusHeader::read(need(TAG_PARAMS)?)?;
        let vk = VerificationKey::from_bytes(need(TAG_VK)?)?;
        let ct = ChunkedCiphertext::from_bytes(need(TAG_CT)?)?;
        let proof = ConsistencyProof::from_bytes(need(TAG_PROOF)?)?;
        let subset = match sections[TAG_SUBSET as usize] {
            None => None,
            Some(mut body) => {
                let commitment = decode_g1(take(&mut body, 48)?)?;
                let proof = decode_g1(take(&mut body, 48)?)?;
                let vanishing = match body.len() {
                    0 => None,
                    192 => Some(VanishingOpening {
                        commitment: decode_g2(&body[..96])?,
                        proof: decode_g2(&body[96..])?,
                    }),
                    _ => return Err(Error::encoding("bad subset section")),
                };
                Some(SubsetOpening { commitment, proof, vanishing })
            }
        };
        Ok(Self { header, vk, ct, subset, proof })
    }
}
