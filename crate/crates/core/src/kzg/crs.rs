use std::io::{Read, Write};
use std::sync::OnceLock;

use blstrs::Bls12;
use ff::{Field, PrimeField};
use group::prime::PrimeCurveAffine;
use group::{Curve, Group, GroupEncoding};
use rand::RngCore;
use sha2::{Digest, Sha256};

use super::{FixedBaseTable, PairingBackend};
use crate::{Error, Result};

const MAGIC: &[u8; 7] = b"FDECRS1";
const SPOT_CHECKS: usize = 8;

/// Powers of a secret `tau` in both source groups, index 0 included.
pub struct Crs<E: PairingBackend = Bls12> {
    g1: Vec<E::G1Affine>,
    g2: Vec<E::G2Affine>,
    tau: Option<E::Fr>,
    digest: OnceLock<[u8; 32]>,
}

impl<E: PairingBackend> Clone for Crs<E> {
    fn clone(&self) -> Self {
        Self {
            g1: self.g1.clone(),
            g2: self.g2.clone(),
            tau: self.tau,
            digest: self.digest.clone(),
        }
    }
}

impl<E: PairingBackend> std::fmt::Debug for Crs<E> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Crs")
            .field("max_degree", &self.max_degree())
            .field("insecure", &self.tau.is_some())
            .finish()
    }
}

fn powers<F: Field>(tau: F, n: usize) -> Vec<F> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = F::ONE;
    for _ in 0..=n {
        out.push(acc);
        acc *= tau;
    }
    out
}

impl<E: PairingBackend> Crs<E> {
    /// Samples `tau`, builds powers up to degree `n` and drops `tau`.
    pub fn setup(n: usize, rng: &mut impl RngCore) -> Result<Self> {
        let tau = E::Fr::random(rng);
        let mut crs = Self::from_tau(n, tau)?;
        crs.tau = None;
        Ok(crs)
    }

    /// INSECURE: builds the reference string from a known `tau` and keeps
    /// it, so tests can compare commitments against direct evaluation.
    pub fn setup_insecure(n: usize, tau: E::Fr) -> Result<Self> {
        Self::from_tau(n, tau)
    }

    fn from_tau(n: usize, tau: E::Fr) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("reference string degree must be at least 1"));
        }
        let scalar_bits = E::Fr::NUM_BITS as usize;
        let pw = powers(tau, n);
        let t1 = FixedBaseTable::with_normalizer(E::G1::generator(), 8, scalar_bits, E::normalize_g1);
        let g1: Vec<E::G1> = pw.iter().map(|p| t1.mul(p)).collect();
        let t2 = FixedBaseTable::with_normalizer(E::G2::generator(), 8, scalar_bits, E::normalize_g2);
        let g2: Vec<E::G2> = pw.iter().map(|p| t2.mul(p)).collect();
        Ok(Self {
            g1: E::normalize_g1(&g1),
            g2: E::normalize_g2(&g2),
            tau: Some(tau),
            digest: OnceLock::new(),
        })
    }

    /// Maximum committable degree.
    pub fn max_degree(&self) -> usize {
        self.g1.len() - 1
    }

    pub fn g1_powers(&self) -> &[E::G1Affine] {
        &self.g1
    }

    pub fn g2_powers(&self) -> &[E::G2Affine] {
        &self.g2
    }

    /// The trapdoor, present only for reference strings built by
    /// [`Crs::setup_insecure`].
    pub fn insecure_tau(&self) -> Option<E::Fr> {
        self.tau
    }

    /// Keeps powers up to degree `n`. Shorter strings verify the same
    /// openings for low-degree polynomials.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.max_degree() {
            return Err(Error::domain(format!("cannot truncate degree {} to {n}", self.max_degree())));
        }
        Ok(Self {
            g1: self.g1[..=n].to_vec(),
            g2: self.g2[..=n].to_vec(),
            tau: self.tau,
            digest: OnceLock::new(),
        })
    }

    /// Checks that both vectors are powers of one `tau`.
    ///
    /// Random linear combinations compress the chain conditions
    /// `e(P_{i+1}, Q_0) = e(P_i, Q_1)` and `e(P_0, Q_{i+1}) = e(P_1, Q_i)`
    /// into two pairing products; sampled pairs `(i, j)` then check
    /// `e(P_i, Q_j) = e(P_{i+j}, Q_0)` directly.
    pub fn check_consistency(&self, rng: &mut impl RngCore) -> bool {
        let n = self.max_degree();
        if self.g2.len() != n + 1
            || self.g1[0] != E::G1Affine::generator()
            || self.g2[0] != E::G2Affine::generator()
        {
            return false;
        }
        let r: Vec<E::Fr> = (0..n).map(|_| E::Fr::random(&mut *rng)).collect();
        let hi1 = E::msm_g1(&self.g1[1..], &r).to_affine();
        let lo1 = E::msm_g1(&self.g1[..n], &r).to_affine();
        let hi2 = E::msm_g2(&self.g2[1..], &r).to_affine();
        let lo2 = E::msm_g2(&self.g2[..n], &r).to_affine();
        if !E::pairing_product_is_one(&[(hi1, self.g2[0]), (-lo1, self.g2[1])]) {
            return false;
        }
        if !E::pairing_product_is_one(&[(self.g1[0], hi2), (-self.g1[1], lo2)]) {
            return false;
        }
        for _ in 0..SPOT_CHECKS {
            let i = (rng.next_u64() % (n as u64 + 1)) as usize;
            let j = (rng.next_u64() % (n as u64 + 1 - i as u64)) as usize;
            if !E::pairing_product_is_one(&[(self.g1[i], self.g2[j]), (-self.g1[i + j], self.g2[0])]) {
                return false;
            }
        }
        true
    }

    /// SHA-256 over the serialized form, computed once.
    pub fn digest(&self) -> [u8; 32] {
        *self.digest.get_or_init(|| {
            let mut h = Sha256::new();
            self.write_parts(&mut |bytes| h.update(bytes));
            h.finalize().into()
        })
    }

    fn write_parts(&self, sink: &mut dyn FnMut(&[u8])) {
        sink(MAGIC);
        sink(&(self.max_degree() as u64).to_le_bytes());
        for p in &self.g1 {
            sink(p.to_bytes().as_ref());
        }
        for p in &self.g2 {
            sink(p.to_bytes().as_ref());
        }
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let mut buf = Vec::new();
        self.write_parts(&mut |bytes| buf.extend_from_slice(bytes));
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_parts(&mut |bytes| buf.extend_from_slice(bytes));
        buf
    }

    /// Parses the file format, validating every point and the pairing
    /// structure. The trapdoor is never part of the encoding.
    pub fn read_from(r: &mut impl Read, rng: &mut impl RngCore) -> Result<Self> {
        let mut magic = [0u8; 7];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::encoding("bad reference string magic"));
        }
        let mut n_bytes = [0u8; 8];
        r.read_exact(&mut n_bytes)?;
        let n = u64::from_le_bytes(n_bytes);
        if n == 0 || n > u32::MAX as u64 {
            return Err(Error::encoding(format!("implausible degree {n}")));
        }
        let g1 = read_points::<E::G1Affine>(r, n as usize + 1)?;
        let g2 = read_points::<E::G2Affine>(r, n as usize + 1)?;
        let crs = Self { g1, g2, tau: None, digest: OnceLock::new() };
        if !crs.check_consistency(rng) {
            return Err(Error::InconsistentCrs);
        }
        Ok(crs)
    }

    pub fn from_bytes(bytes: &[u8], rng: &mut impl RngCore) -> Result<Self> {
        let mut cursor = bytes;
        let crs = Self::read_from(&mut cursor, rng)?;
        if !cursor.is_empty() {
            return Err(Error::encoding("trailing bytes after reference string"));
        }
        Ok(crs)
    }
}

fn read_points<P: GroupEncoding>(r: &mut impl Read, count: usize) -> Result<Vec<P>> {
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut repr = P::Repr::default();
        r.read_exact(repr.as_mut())?;
        let p = Option::from(P::from_bytes(&repr))
            .ok_or_else(|| Error::encoding(format!("point {i} is not a valid subgroup element")))?;
        out.push(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use blstrs::{G1Affine, G2Affine, Scalar};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn degree_one_with_known_tau() {
        let crs = Crs::<Bls12>::setup_insecure(1, Scalar::from(5u64)).unwrap();
        assert_eq!(crs.g1_powers(), &[G1Affine::generator(), (G1Affine::generator() * Scalar::from(5u64)).to_affine()]);
        assert_eq!(crs.g2_powers()[1], (G2Affine::generator() * Scalar::from(5u64)).to_affine());
        assert!(Crs::<Bls12>::setup_insecure(0, Scalar::ONE).is_err());
    }

    #[test]
    fn serialization_roundtrip_and_swap_detection() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let crs = Crs::<Bls12>::setup(12, &mut rng).unwrap();
        assert!(crs.insecure_tau().is_none());
        assert!(crs.check_consistency(&mut rng));
        let bytes = crs.to_bytes();
        assert_eq!(bytes.len(), 7 + 8 + 13 * (48 + 96));
        let back = Crs::<Bls12>::from_bytes(&bytes, &mut rng).unwrap();
        assert_eq!(back.g1_powers(), crs.g1_powers());
        assert_eq!(back.digest(), crs.digest());

        // Swap two G1 powers in the encoding.
        let mut swapped = bytes.clone();
        let (a, b) = (15 + 3 * 48, 15 + 5 * 48);
        for k in 0..48 {
            swapped.swap(a + k, b + k);
        }
        assert!(matches!(Crs::<Bls12>::from_bytes(&swapped, &mut rng), Err(Error::InconsistentCrs)));

        // Swap two G2 powers.
        let mut swapped = bytes.clone();
        let base = 15 + 13 * 48;
        for k in 0..96 {
            swapped.swap(base + 96 + k, base + 2 * 96 + k);
        }
        assert!(matches!(Crs::<Bls12>::from_bytes(&swapped, &mut rng), Err(Error::InconsistentCrs)));

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(Crs::<Bls12>::from_bytes(&bad_magic, &mut rng).is_err());
        assert!(Crs::<Bls12>::from_bytes(&bytes[..bytes.len() - 1], &mut rng).is_err());
    }

    #[test]
    fn unrelated_g2_tau_fails_check() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let a = Crs::<Bls12>::setup_insecure(6, Scalar::from(7u64)).unwrap();
        let b = Crs::<Bls12>::setup_insecure(6, Scalar::from(8u64)).unwrap();
        let mixed = Crs::<Bls12> {
            g1: a.g1.clone(),
            g2: b.g2.clone(),
            tau: None,
            digest: OnceLock::new(),
        };
        assert!(!mixed.check_consistency(&mut rng));
    }
}
