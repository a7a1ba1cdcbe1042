//! Radix-2 number-theoretic transform, used only as a multiplication engine
//! for long polynomials. Evaluation domains stay on the integers.

use ff::PrimeField;

/// Below this many output coefficients schoolbook multiplication wins.
const SCHOOLBOOK_LIMIT: usize = 64;

fn bit_reverse<F>(values: &mut [F]) {
    let n = values.len();
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            values.swap(i, j);
        }
    }
}

/// Principal root of unity of order `n` (a power of two).
fn root_of_unity<F: PrimeField>(n: usize) -> F {
    let log_n = n.trailing_zeros();
    assert!(n.is_power_of_two(), "transform size must be a power of two");
    assert!(log_n <= F::S, "field has no root of unity of order 2^{log_n}");
    let mut w = F::ROOT_OF_UNITY;
    for _ in log_n..F::S {
        w = w.square();
    }
    w
}

/// In-place transform of `values` (length a power of two).
pub fn transform<F: PrimeField>(values: &mut [F], inverse: bool) {
    let n = values.len();
    if n <= 1 {
        return;
    }
    bit_reverse(values);
    let mut omega = root_of_unity::<F>(n);
    if inverse {
        omega = omega.invert().expect("root of unity is nonzero");
    }
    // Twiddles for the final stage; earlier stages stride through them.
    let half = n / 2;
    let mut twiddles = Vec::with_capacity(half);
    let mut w = F::ONE;
    for _ in 0..half {
        twiddles.push(w);
        w *= omega;
    }
    let mut len = 2;
    while len <= n {
        let step = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..len / 2 {
                let t = values[start + k + len / 2] * twiddles[k * step];
                let u = values[start + k];
                values[start + k] = u + t;
                values[start + k + len / 2] = u - t;
            }
        }
        len <<= 1;
    }
    if inverse {
        let n_inv = F::from(n as u64).invert().expect("size below characteristic");
        for v in values.iter_mut() {
            *v *= n_inv;
        }
    }
}

fn schoolbook<F: PrimeField>(a: &[F], b: &[F]) -> Vec<F> {
    let mut out = vec![F::ZERO; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if bool::from(x.is_zero()) {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += *x * y;
        }
    }
    out
}

/// Full linear convolution of two coefficient sequences.
pub fn convolve<F: PrimeField>(a: &[F], b: &[F]) -> Vec<F> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= SCHOOLBOOK_LIMIT || out_len <= 2 * SCHOOLBOOK_LIMIT {
        return schoolbook(a, b);
    }
    let size = out_len.next_power_of_two();
    if size.trailing_zeros() > F::S {
        return schoolbook(a, b);
    }
    let mut fa = a.to_vec();
    fa.resize(size, F::ZERO);
    let mut fb = b.to_vec();
    fb.resize(size, F::ZERO);
    transform(&mut fa, false);
    transform(&mut fb, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    transform(&mut fa, true);
    fa.truncate(out_len);
    fa
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ToyField;
    use crate::Scalar;
    use ff::Field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn transform_roundtrip() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let original: Vec<Scalar> = (0..256).map(|_| Scalar::random(&mut rng)).collect();
        let mut v = original.clone();
        transform(&mut v, false);
        assert_ne!(v, original);
        transform(&mut v, true);
        assert_eq!(v, original);
    }

    #[test]
    fn convolution_agrees_with_schoolbook() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for (la, lb) in [(1, 1), (70, 300), (513, 129), (1000, 1000)] {
            let a: Vec<Scalar> = (0..la).map(|_| Scalar::random(&mut rng)).collect();
            let b: Vec<Scalar> = (0..lb).map(|_| Scalar::random(&mut rng)).collect();
            assert_eq!(convolve(&a, &b), schoolbook(&a, &b), "{la}x{lb}");
        }
        let a: Vec<ToyField> = (0..500).map(|_| ToyField::random(&mut rng)).collect();
        let b: Vec<ToyField> = (0..200).map(|_| ToyField::random(&mut rng)).collect();
        assert_eq!(convolve(&a, &b), schoolbook(&a, &b));
    }
}
