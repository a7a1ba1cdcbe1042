use blst::{blst_p1, blst_p1_affine, blst_p2, blst_p2_affine, p1_affines, p2_affines, MultiPoint};
use blstrs::{Bls12, G1Affine, G1Projective, G2Affine, G2Projective, Scalar};
use ff::PrimeFieldBits;
use group::prime::PrimeCurveAffine;
use group::{Curve, Group};
use pairing::{MillerLoopResult, MultiMillerLoop};

/// Pairing engine plus the batched operations the commitment scheme needs.
///
/// Multi-scalar multiplication is a single backend call so implementations
/// can use bucket methods without changing the scheme.
pub trait PairingBackend: MultiMillerLoop<Fr: PrimeFieldBits> {
    fn msm_g1(bases: &[Self::G1Affine], scalars: &[Self::Fr]) -> Self::G1;

    fn msm_g2(bases: &[Self::G2Affine], scalars: &[Self::Fr]) -> Self::G2;

    fn normalize_g1(points: &[Self::G1]) -> Vec<Self::G1Affine> {
        let mut out = vec![Self::G1Affine::identity(); points.len()];
        Self::G1::batch_normalize(points, &mut out);
        out
    }

    fn normalize_g2(points: &[Self::G2]) -> Vec<Self::G2Affine> {
        let mut out = vec![Self::G2Affine::identity(); points.len()];
        Self::G2::batch_normalize(points, &mut out);
        out
    }

    /// True iff `prod e(a_i, b_i)` is the identity of the target group.
    fn pairing_product_is_one(terms: &[(Self::G1Affine, Self::G2Affine)]) -> bool {
        let prepared: Vec<(Self::G1Affine, Self::G2Prepared)> =
            terms.iter().map(|(a, b)| (*a, (*b).into())).collect();
        let refs: Vec<(&Self::G1Affine, &Self::G2Prepared)> =
            prepared.iter().map(|(a, b)| (a, b)).collect();
        bool::from(Self::multi_miller_loop(&refs).final_exponentiation().is_identity())
    }
}

fn scalar_bytes(scalars: &[Scalar]) -> Vec<u8> {
    let mut out = Vec::with_capacity(scalars.len() * 32);
    for s in scalars {
        out.extend_from_slice(&s.to_bytes_le());
    }
    out
}

// The blstrs point types are `repr(transparent)` wrappers around the blst
// structs, so slices and values can be reinterpreted in place.

fn as_blst_p1_affines(points: &[G1Affine]) -> &[blst_p1_affine] {
    // SAFETY: G1Affine is repr(transparent) over blst_p1_affine.
    unsafe { std::slice::from_raw_parts(points.as_ptr().cast(), points.len()) }
}

fn as_blst_p2_affines(points: &[G2Affine]) -> &[blst_p2_affine] {
    // SAFETY: G2Affine is repr(transparent) over blst_p2_affine.
    unsafe { std::slice::from_raw_parts(points.as_ptr().cast(), points.len()) }
}

fn g1_from_blst(p: blst_p1) -> G1Projective {
    // SAFETY: G1Projective is repr(transparent) over blst_p1.
    unsafe { std::mem::transmute::<blst_p1, G1Projective>(p) }
}

fn g2_from_blst(p: blst_p2) -> G2Projective {
    // SAFETY: G2Projective is repr(transparent) over blst_p2.
    unsafe { std::mem::transmute::<blst_p2, G2Projective>(p) }
}

impl PairingBackend for Bls12 {
    fn msm_g1(bases: &[G1Affine], scalars: &[Scalar]) -> G1Projective {
        let n = bases.len().min(scalars.len());
        match n {
            0 => G1Projective::identity(),
            1 => bases[0] * scalars[0],
            _ => g1_from_blst(as_blst_p1_affines(&bases[..n]).mult(&scalar_bytes(&scalars[..n]), 255)),
        }
    }

    fn msm_g2(bases: &[G2Affine], scalars: &[Scalar]) -> G2Projective {
        let n = bases.len().min(scalars.len());
        match n {
            0 => G2Projective::identity(),
            1 => bases[0] * scalars[0],
            _ => g2_from_blst(as_blst_p2_affines(&bases[..n]).mult(&scalar_bytes(&scalars[..n]), 255)),
        }
    }

    fn normalize_g1(points: &[G1Projective]) -> Vec<G1Affine> {
        if points.is_empty() {
            return Vec::new();
        }
        // SAFETY: G1Projective is repr(transparent) over blst_p1.
        let raw: &[blst_p1] =
            unsafe { std::slice::from_raw_parts(points.as_ptr().cast(), points.len()) };
        let affine = p1_affines::from(raw);
        // SAFETY: G1Affine is repr(transparent) over blst_p1_affine.
        affine
            .as_slice()
            .iter()
            .map(|p| unsafe { std::mem::transmute::<blst_p1_affine, G1Affine>(*p) })
            .collect()
    }

    fn normalize_g2(points: &[G2Projective]) -> Vec<G2Affine> {
        if points.is_empty() {
            return Vec::new();
        }
        // SAFETY: G2Projective is repr(transparent) over blst_p2.
        let raw: &[blst_p2] =
            unsafe { std::slice::from_raw_parts(points.as_ptr().cast(), points.len()) };
        let affine = p2_affines::from(raw);
        // SAFETY: G2Affine is repr(transparent) over blst_p2_affine.
        affine
            .as_slice()
            .iter()
            .map(|p| unsafe { std::mem::transmute::<blst_p2_affine, G2Affine>(*p) })
            .collect()
    }
}
