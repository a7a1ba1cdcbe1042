use ff::PrimeFieldBits;
use group::prime::{PrimeCurve, PrimeCurveAffine};

/// Precomputed multiples of a fixed base for repeated scalar multiplication.
///
/// Window `w` stores `d * 2^(w*c) * B` for `d in 1..2^c`, so a product costs
/// one mixed addition per nonzero window.
#[derive(Clone, Debug)]
pub struct FixedBaseTable<G: PrimeCurve> {
    window_bits: usize,
    windows: Vec<Vec<G::Affine>>,
}

impl<G: PrimeCurve> FixedBaseTable<G>
where
    G::Scalar: PrimeFieldBits,
{
    pub fn new(base: G, window_bits: usize, scalar_bits: usize) -> Self {
        Self::with_normalizer(base, window_bits, scalar_bits, |points| {
            let mut out = vec![G::Affine::identity(); points.len()];
            G::batch_normalize(points, &mut out);
            out
        })
    }

    /// As [`Self::new`] with a caller-supplied batch affine conversion.
    pub fn with_normalizer(
        base: G,
        window_bits: usize,
        scalar_bits: usize,
        normalize: impl Fn(&[G]) -> Vec<G::Affine>,
    ) -> Self {
        assert!((1..=16).contains(&window_bits));
        let n_windows = scalar_bits.div_ceil(window_bits);
        let per_window = (1usize << window_bits) - 1;
        let mut flat = Vec::with_capacity(n_windows * per_window);
        let mut window_base = base;
        for _ in 0..n_windows {
            let mut acc = window_base;
            for _ in 0..per_window {
                flat.push(acc);
                acc += window_base;
            }
            // acc = 2^c * window_base
            window_base = acc;
        }
        let affine = normalize(&flat);
        let windows = affine.chunks(per_window).map(|c| c.to_vec()).collect();
        Self { window_bits, windows }
    }

    pub fn mul(&self, s: &G::Scalar) -> G {
        let bits = s.to_le_bits();
        let mut acc = G::identity();
        let mut bit_iter = bits.iter().map(|b| *b);
        for window in &self.windows {
            let mut digit = 0usize;
            for k in 0..self.window_bits {
                if bit_iter.next().unwrap_or(false) {
                    digit |= 1 << k;
                }
            }
            if digit != 0 {
                acc += window[digit - 1];
            }
        }
        debug_assert!(bit_iter.all(|b| !b), "scalar wider than the table");
        acc
    }

    /// Multiplication by a small integer, touching only the low windows.
    pub fn mul_u64(&self, mut v: u64) -> G {
        let mut acc = G::identity();
        let mask = (1u64 << self.window_bits) - 1;
        for window in &self.windows {
            if v == 0 {
                break;
            }
            let digit = (v & mask) as usize;
            if digit != 0 {
                acc += window[digit - 1];
            }
            v >>= self.window_bits;
        }
        assert_eq!(v, 0, "integer wider than the table");
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use blstrs::{G1Projective, G2Projective, Scalar};
    use ff::Field;
    use group::Group;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn table_products_match_direct_multiplication() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let b1 = G1Projective::random(&mut rng);
        let b2 = G2Projective::random(&mut rng);
        let t1 = FixedBaseTable::new(b1, 8, 255);
        let t2 = FixedBaseTable::new(b2, 5, 255);
        for _ in 0..20 {
            let s = Scalar::random(&mut rng);
            assert_eq!(t1.mul(&s), b1 * s);
            assert_eq!(t2.mul(&s), b2 * s);
        }
        assert_eq!(t1.mul(&Scalar::ZERO), G1Projective::identity());
        assert_eq!(t1.mul(&-Scalar::ONE), -b1);
        for v in [0u64, 1, 255, 256, 65535, 1 << 40] {
            assert_eq!(t1.mul_u64(v), b1 * Scalar::from(v));
        }
    }
}
