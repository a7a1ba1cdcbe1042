use ff::{Field, PrimeField};

use crate::{Error, Result, Scalar};

/// Canonical scalar encoding length: 32 bytes, little-endian.
pub const SCALAR_BYTES: usize = 32;

/// Small prime field (p = 65537) used to measure false-accept rates of the
/// coding layer, where the full-size field would make them unobservable.
#[derive(PrimeField)]
#[PrimeFieldModulus = "65537"]
#[PrimeFieldGenerator = "3"]
#[PrimeFieldReprEndianness = "little"]
pub struct ToyField([u64; 1]);

pub fn scalar_to_bytes(s: &Scalar) -> [u8; SCALAR_BYTES] {
    s.to_bytes_le()
}

/// Decodes a canonical scalar, rejecting values `>= p`.
pub fn scalar_from_bytes(bytes: &[u8]) -> Result<Scalar> {
    let arr: [u8; SCALAR_BYTES] = bytes
        .try_into()
        .map_err(|_| Error::encoding(format!("scalar needs 32 bytes, got {}", bytes.len())))?;
    Option::from(Scalar::from_bytes_le(&arr))
        .ok_or_else(|| Error::encoding("scalar out of range"))
}

/// Reduces 512 uniformly random bits into the field. The statistical
/// distance from uniform is below 2^-256 for any field under 256 bits.
pub fn from_uniform_bytes<F: PrimeField>(bytes: &[u8; 64]) -> F {
    let shift = F::from(1u64 << 32).square();
    bytes.chunks_exact(8).rev().fold(F::ZERO, |acc, limb| {
        acc * shift + F::from(u64::from_le_bytes(limb.try_into().expect("8-byte limb")))
    })
}

fn scalar_modulus() -> [u64; 4] {
    let repr = Scalar::char();
    let mut out = [0u64; 4];
    for (o, c) in out.iter_mut().zip(repr.chunks_exact(8)) {
        *o = u64::from_le_bytes(c.try_into().unwrap());
    }
    out
}

fn reduce_256(mut a: [u64; 4], p: &[u64; 4]) -> Scalar {
    // 2^256 < 5p, so at most four subtractions.
    loop {
        let mut diff = [0u64; 4];
        let mut borrow = 0u64;
        for k in 0..4 {
            let (d1, b1) = a[k].overflowing_sub(p[k]);
            let (d2, b2) = d1.overflowing_sub(borrow);
            diff[k] = d2;
            borrow = (b1 | b2) as u64;
        }
        if borrow == 1 {
            return Option::from(Scalar::from_u64s_le(&a)).expect("reduced below the modulus");
        }
        a = diff;
    }
}

/// [`from_uniform_bytes`] specialized to the scalar field: two 256-bit
/// halves and one multiplication by `2^256 mod p`.
pub fn scalar_from_uniform_bytes(bytes: &[u8; 64]) -> Scalar {
    let p = scalar_modulus();
    let limbs = |half: &[u8]| -> [u64; 4] {
        let mut out = [0u64; 4];
        for (o, c) in out.iter_mut().zip(half.chunks_exact(8)) {
            *o = u64::from_le_bytes(c.try_into().unwrap());
        }
        out
    };
    let two_256 = reduce_256([u64::MAX; 4], &p) + Scalar::ONE;
    reduce_256(limbs(&bytes[..32]), &p) + reduce_256(limbs(&bytes[32..]), &p) * two_256
}

/// Embeds a small unsigned integer (an evaluation point or index).
pub fn small_field_element<F: PrimeField>(v: u64) -> F {
    F::from(v)
}
