use std::ops::{Add, Mul, Neg, Sub};

use ff::{BatchInvert, PrimeField};

use super::consecutive::interpolate_consecutive;
use super::ntt::convolve;
use super::EvalDomain;
use crate::{Error, Result, Scalar};

/// Dense univariate polynomial, coefficient `i` multiplies `X^i`.
///
/// Trailing zero coefficients are trimmed, so the zero polynomial has no
/// coefficients at all.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial<F = Scalar> {
    coeffs: Vec<F>,
}

impl<F: PrimeField> Default for Polynomial<F> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<F: PrimeField> Polynomial<F> {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: F) -> Self {
        Self::from_coeffs(vec![c])
    }

    /// The monic linear polynomial `X - a`.
    pub fn linear_root(a: F) -> Self {
        Self { coeffs: vec![-a, F::ONE] }
    }

    pub fn from_coeffs(mut coeffs: Vec<F>) -> Self {
        while coeffs.last().is_some_and(|c| bool::from(c.is_zero())) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[F] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<F> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: &F) -> F {
        self.coeffs.iter().rev().fold(F::ZERO, |acc, c| acc * x + c)
    }

    pub fn scale(&self, k: &F) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|c| *c * k).collect())
    }

    /// Quotient and remainder of Euclidean division by `den`.
    pub fn div_rem(&self, den: &Self) -> Result<(Self, Self)> {
        let d = den
            .degree()
            .ok_or_else(|| Error::domain("division by the zero polynomial"))?;
        if self.coeffs.len() <= d {
            return Ok((Self::zero(), self.clone()));
        }
        if self.coeffs.len() - d > FAST_DIVISION_MIN && d >= FAST_DIVISOR_MIN {
            return Ok(self.div_rem_fast(den, d));
        }
        let lead_inv = den.coeffs[d].invert().expect("leading coefficient is nonzero");
        let monic = lead_inv == F::ONE;
        let mut rem = self.coeffs.clone();
        let mut quot = vec![F::ZERO; rem.len() - d];
        for k in (0..quot.len()).rev() {
            let mut q = rem[k + d];
            if !monic {
                q *= lead_inv;
            }
            quot[k] = q;
            if bool::from(q.is_zero()) {
                continue;
            }
            for (r, c) in rem[k..k + d].iter_mut().zip(&den.coeffs[..d]) {
                *r -= q * c;
            }
            rem[k + d] = F::ZERO;
        }
        rem.truncate(d);
        Ok((Self::from_coeffs(quot), Self::from_coeffs(rem)))
    }

    /// Division through the reversed power-series inverse of `den`.
    fn div_rem_fast(&self, den: &Self, d: usize) -> (Self, Self) {
        let qlen = self.coeffs.len() - d;
        let rev_den: Vec<F> = den.coeffs.iter().rev().copied().collect();
        let inv = inverse_series(&rev_den, qlen);
        let rev_num: Vec<F> = self.coeffs.iter().rev().take(qlen).copied().collect();
        let mut q = convolve(&rev_num, &inv);
        q.truncate(qlen);
        q.reverse();
        let quot = Self::from_coeffs(q);
        let prod = convolve(&quot.coeffs, &den.coeffs);
        let rem = self.coeffs[..d].iter().zip(&prod).map(|(a, b)| *a - b).collect();
        (quot, Self::from_coeffs(rem))
    }

    /// Division that must be exact; a nonzero remainder is an error.
    pub fn divide_exact(&self, den: &Self) -> Result<Self> {
        let (q, r) = self.div_rem(den)?;
        if r.is_zero() {
            Ok(q)
        } else {
            Err(Error::NotDivisible)
        }
    }

    /// Synthetic division by `X - a`, returning the quotient and `p(a)`.
    pub fn div_linear(&self, a: &F) -> (Self, F) {
        if self.coeffs.is_empty() {
            return (Self::zero(), F::ZERO);
        }
        let n = self.coeffs.len();
        let mut quot = vec![F::ZERO; n - 1];
        let mut carry = F::ZERO;
        for k in (0..n).rev() {
            let v = self.coeffs[k] + carry * a;
            if k == 0 {
                return (Self::from_coeffs(quot), v);
            }
            quot[k - 1] = v;
            carry = v;
        }
        unreachable!()
    }
}

impl<F: PrimeField> Add for &Polynomial<F> {
    type Output = Polynomial<F>;

    fn add(self, rhs: Self) -> Polynomial<F> {
        let (long, short) = if self.coeffs.len() >= rhs.coeffs.len() {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let mut out = long.coeffs.clone();
        for (o, c) in out.iter_mut().zip(&short.coeffs) {
            *o += c;
        }
        Polynomial::from_coeffs(out)
    }
}

impl<F: PrimeField> Neg for &Polynomial<F> {
    type Output = Polynomial<F>;

    fn neg(self) -> Polynomial<F> {
        Polynomial { coeffs: self.coeffs.iter().map(|c| -*c).collect() }
    }
}

impl<F: PrimeField> Sub for &Polynomial<F> {
    type Output = Polynomial<F>;

    fn sub(self, rhs: Self) -> Polynomial<F> {
        self + &(-rhs)
    }
}

impl<F: PrimeField> Mul for &Polynomial<F> {
    type Output = Polynomial<F>;

    fn mul(self, rhs: Self) -> Polynomial<F> {
        Polynomial::from_coeffs(convolve(&self.coeffs, &rhs.coeffs))
    }
}

const FAST_DIVISION_MIN: usize = 256;

/// Below this divisor degree long division beats the series inverse at any
/// numerator size (measured crossover sits between 256 and 512).
const FAST_DIVISOR_MIN: usize = 384;

/// First `n` coefficients of `1 / a`, by Newton iteration. `a[0]` must be
/// nonzero.
fn inverse_series<F: PrimeField>(a: &[F], n: usize) -> Vec<F> {
    let mut b = vec![a[0].invert().expect("constant term is nonzero")];
    let two = F::ONE.double();
    while b.len() < n {
        let len = (2 * b.len()).min(n);
        let mut t = convolve(&a[..a.len().min(len)], &b);
        t.truncate(len);
        for c in t.iter_mut() {
            *c = -*c;
        }
        t[0] += two;
        b = convolve(&b, &t);
        b.truncate(len);
    }
    b.truncate(n);
    b
}

/// `prod (X - x)` over the given points, built as a product tree.
pub fn vanishing<F: PrimeField>(points: &[F]) -> Polynomial<F> {
    fn tree<F: PrimeField>(points: &[F]) -> Vec<F> {
        if points.len() <= 16 {
            let mut acc = vec![F::ONE];
            for x in points {
                acc.push(F::ZERO);
                for k in (1..acc.len()).rev() {
                    acc[k] = acc[k - 1] - acc[k] * x;
                }
                acc[0] = -acc[0] * x;
            }
            return acc;
        }
        let (lo, hi) = points.split_at(points.len() / 2);
        convolve(&tree(lo), &tree(hi))
    }
    Polynomial::from_coeffs(tree(points))
}

/// Lagrange interpolation through `(points[i], values[i])`.
///
/// Runs in quadratic time over arbitrary points. The domain `0..n` is
/// dispatched to a quasi-linear routine.
pub fn interpolate<F: PrimeField>(points: &EvalDomain<F>, values: &[F]) -> Result<Polynomial<F>> {
    if points.len() != values.len() {
        return Err(Error::domain(format!(
            "{} points but {} values",
            points.len(),
            values.len()
        )));
    }
    if points.is_empty() {
        return Err(Error::domain("interpolation needs at least one point"));
    }
    if points.is_prefix_range() {
        return interpolate_consecutive(values);
    }
    let xs = points.points();
    let v = vanishing(xs);
    // Barycentric weights 1 / V'(x_i).
    let deriv = Polynomial::from_coeffs(
        v.coeffs()
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| *c * F::from(k as u64))
            .collect(),
    );
    let mut weights: Vec<F> = xs.iter().map(|x| deriv.eval(x)).collect();
    weights.iter_mut().batch_invert();

    let mut out = vec![F::ZERO; xs.len()];
    for ((x, y), w) in xs.iter().zip(values).zip(&weights) {
        let scale = *y * w;
        if bool::from(scale.is_zero()) {
            continue;
        }
        let (basis, _) = v.div_linear(x);
        for (o, c) in out.iter_mut().zip(basis.coeffs()) {
            *o += scale * c;
        }
    }
    Ok(Polynomial::from_coeffs(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ToyField;
    use ff::Field;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn s(v: u64) -> Scalar {
        Scalar::from(v)
    }

    fn poly(c: &[i64]) -> Polynomial {
        Polynomial::from_coeffs(
            c.iter()
                .map(|&v| if v < 0 { -s(v.unsigned_abs()) } else { s(v as u64) })
                .collect(),
        )
    }

    fn random_poly(rng: &mut ChaCha20Rng, len: usize) -> Polynomial {
        Polynomial::from_coeffs((0..len).map(|_| Scalar::random(&mut *rng)).collect())
    }

    #[test]
    fn horner_evaluation() {
        assert_eq!(poly(&[0]).eval(&s(7)), s(0));
        assert_eq!(poly(&[1, 1]).eval(&s(4)), s(5));
        assert_eq!(poly(&[2, 0, 3]).eval(&s(5)), s(77));
    }

    #[test]
    fn interpolation_small_cases() {
        let d = EvalDomain::new(vec![s(3)]).unwrap();
        assert_eq!(interpolate(&d, &[s(9)]).unwrap(), poly(&[9]));
        let d = EvalDomain::new(vec![s(0), s(1)]).unwrap();
        assert_eq!(interpolate(&d, &[s(1), s(2)]).unwrap(), poly(&[1, 1]));
        assert!(interpolate(&d, &[s(1)]).is_err());
    }

    #[test]
    fn interpolation_roundtrip_degree_seven() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let p = random_poly(&mut rng, 8);
        let pts: Vec<Scalar> = (0..8).map(|_| Scalar::random(&mut rng)).collect();
        let values: Vec<Scalar> = pts.iter().map(|x| p.eval(x)).collect();
        let d = EvalDomain::new(pts).unwrap();
        assert_eq!(interpolate(&d, &values).unwrap(), p);
    }

    #[test]
    fn vanishing_small_cases() {
        assert_eq!(vanishing(&[s(0)]), poly(&[0, 1]));
        assert_eq!(vanishing(&[s(1), s(2)]), poly(&[2, -3, 1]));
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let pts: Vec<Scalar> = (0..10).map(|_| Scalar::random(&mut rng)).collect();
        let v = vanishing(&pts);
        assert_eq!(v.degree(), Some(10));
        assert!(pts.iter().all(|x| v.eval(x).is_zero_vartime()));
    }

    #[test]
    fn large_vanishing_matches_incremental_product() {
        let pts: Vec<Scalar> = (0..300u64).map(|i| s(i * i + 1)).collect();
        let mut expected = Polynomial::constant(Scalar::ONE);
        for x in &pts {
            expected = &expected * &Polynomial::linear_root(*x);
        }
        assert_eq!(vanishing(&pts), expected);
    }

    #[test]
    fn exact_division() {
        assert_eq!(poly(&[-1, 0, 1]).divide_exact(&poly(&[-1, 1])).unwrap(), poly(&[1, 1]));
        assert!(matches!(
            poly(&[1, 0, 1]).divide_exact(&poly(&[0, 1])),
            Err(Error::NotDivisible)
        ));
        assert!(poly(&[1]).divide_exact(&Polynomial::zero()).is_err());

        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let (a, b) = (Scalar::random(&mut rng), Scalar::random(&mut rng));
        let r = random_poly(&mut rng, 20);
        let den = vanishing(&[a, b]);
        assert_eq!((&r * &den).divide_exact(&den).unwrap(), r);
    }

    #[test]
    fn linear_division_reports_value() {
        let p = poly(&[2, 0, 3]);
        let (q, v) = p.div_linear(&s(5));
        assert_eq!(v, s(77));
        assert_eq!(&(&q * &Polynomial::linear_root(s(5))) + &Polynomial::constant(v), p);
    }

    fn arb_toy_poly(max_len: usize) -> impl Strategy<Value = Polynomial<ToyField>> {
        proptest::collection::vec(0u64..65537, 0..max_len)
            .prop_map(|c| Polynomial::from_coeffs(c.into_iter().map(ToyField::from).collect()))
    }

    proptest! {
        #[test]
        fn prop_interpolate_evaluate_identity(seed in any::<u64>(), len in 1usize..40) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let p = random_poly(&mut rng, len);
            let pts: Vec<Scalar> = (0..len).map(|_| Scalar::random(&mut rng)).collect();
            let values: Vec<Scalar> = pts.iter().map(|x| p.eval(x)).collect();
            let d = EvalDomain::new(pts).unwrap();
            prop_assert_eq!(interpolate(&d, &values).unwrap(), p);
        }

        #[test]
        fn prop_vanishing_roots(idx in proptest::collection::hash_set(0u64..1_000_000, 1..80)) {
            let pts: Vec<Scalar> = idx.iter().map(|&i| s(i)).collect();
            let v = vanishing(&pts);
            prop_assert_eq!(v.degree(), Some(pts.len()));
            prop_assert_eq!(v.coeffs().last().copied(), Some(Scalar::ONE));
            for x in &pts {
                prop_assert!(v.eval(x).is_zero_vartime());
            }
            // No roots outside the set among nearby integers.
            for i in 1_000_000u64..1_000_020 {
                prop_assert!(!v.eval(&s(i)).is_zero_vartime());
            }
        }

        #[test]
        fn prop_divide_product(a in arb_toy_poly(50), b in arb_toy_poly(20)) {
            prop_assume!(!b.is_zero());
            prop_assert_eq!((&a * &b).divide_exact(&b).unwrap(), a);
        }

        #[test]
        fn prop_fast_division_matches_long_division(seed in any::<u64>(), qlen in 257usize..700, d in FAST_DIVISOR_MIN..FAST_DIVISOR_MIN + 64) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let a = random_poly(&mut rng, qlen + d);
            let b = random_poly(&mut rng, d + 1);
            let (q, r) = a.div_rem(&b).unwrap();
            prop_assert!(r.degree() < b.degree());
            prop_assert_eq!(&(&q * &b) + &r, a);
        }

        #[test]
        fn prop_div_rem_reconstructs(a in arb_toy_poly(60), b in arb_toy_poly(20)) {
            prop_assume!(!b.is_zero());
            let (q, r) = a.div_rem(&b).unwrap();
            prop_assert!(r.degree() < b.degree());
            prop_assert_eq!(&(&q * &b) + &r, a);
        }
    }
}
