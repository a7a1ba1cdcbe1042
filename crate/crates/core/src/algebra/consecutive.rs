//! Interpolation and extension over the integer domain `0..n`.
//!
//! The quadratic Lagrange routines in the parent module are too slow for
//! whole files, so these use the structure of consecutive integers: the
//! barycentric weights are binomial and both problems reduce to a single
//! convolution.

use ff::{BatchInvert, PrimeField};

use super::ntt::convolve;
use super::Polynomial;
use crate::{Error, Result};

/// Factorials, inverse factorials and inverses of `1..=n`.
#[derive(Clone, Debug)]
pub struct FactorialTable<F> {
    fact: Vec<F>,
    inv_fact: Vec<F>,
}

impl<F: PrimeField> FactorialTable<F> {
    /// Fails when `n` reaches the field characteristic.
    pub fn new(n: usize) -> Result<Self> {
        let mut fact = Vec::with_capacity(n + 1);
        fact.push(F::ONE);
        for i in 1..=n as u64 {
            let next = *fact.last().unwrap() * F::from(i);
            if bool::from(next.is_zero()) {
                return Err(Error::domain(format!(
                    "{n}! vanishes in a field of characteristic {i}"
                )));
            }
            fact.push(next);
        }
        let mut inv_fact = fact.clone();
        inv_fact.iter_mut().batch_invert();
        Ok(Self { fact, inv_fact })
    }

    pub fn fact(&self, i: usize) -> F {
        self.fact[i]
    }

    pub fn inv_fact(&self, i: usize) -> F {
        self.inv_fact[i]
    }

    /// `1 / i` for `1 <= i <= n`.
    pub fn inv(&self, i: usize) -> F {
        self.inv_fact[i] * self.fact[i - 1]
    }
}

/// Given `values[j] = f(j)` for a polynomial of degree `< k = values.len()`,
/// returns `f(0), .., f(len - 1)`.
pub fn extend_consecutive<F: PrimeField>(values: &[F], len: usize) -> Result<Vec<F>> {
    let k = values.len();
    if k == 0 {
        return Err(Error::domain("cannot extend an empty evaluation vector"));
    }
    if len <= k {
        return Ok(values[..len].to_vec());
    }
    let table = FactorialTable::<F>::new(len - 1)?;
    // a_j = f(j) / prod_{i != j} (j - i)
    let a: Vec<F> = values
        .iter()
        .enumerate()
        .map(|(j, y)| {
            let w = table.inv_fact(j) * table.inv_fact(k - 1 - j);
            if (k - 1 - j) % 2 == 1 {
                -(*y * w)
            } else {
                *y * w
            }
        })
        .collect();
    let mut u = Vec::with_capacity(len);
    u.push(F::ZERO);
    u.extend((1..len).map(|d| table.inv(d)));
    let c = convolve(&a, &u);

    let mut out = values.to_vec();
    out.reserve(len - k);
    // f(x) = x! / (x - k)! * sum_j a_j / (x - j)
    for (x, cx) in c.iter().enumerate().take(len).skip(k) {
        out.push(table.fact(x) * table.inv_fact(x - k) * cx);
    }
    Ok(out)
}

/// Coefficients of the polynomial of degree `< values.len()` with
/// `f(j) = values[j]`.
pub fn interpolate_consecutive<F: PrimeField>(values: &[F]) -> Result<Polynomial<F>> {
    let k = values.len();
    if k == 0 {
        return Err(Error::domain("interpolation needs at least one point"));
    }
    let table = FactorialTable::<F>::new(k - 1)?;
    // Newton coefficients: d_n = sum_j f(j)/j! * (-1)^(n-j)/(n-j)!
    let scaled: Vec<F> = values.iter().enumerate().map(|(j, y)| *y * table.inv_fact(j)).collect();
    let signed: Vec<F> = (0..k)
        .map(|i| if i % 2 == 1 { -table.inv_fact(i) } else { table.inv_fact(i) })
        .collect();
    let mut newton = convolve(&scaled, &signed);
    newton.truncate(k);
    let (g, _) = newton_to_monomial(&newton, 0);
    Ok(Polynomial::from_coeffs(g))
}

/// Expands `sum_n d[n] * prod_{i < n} (X - lo - i)` and also returns
/// `prod_{i < d.len()} (X - lo - i)`.
fn newton_to_monomial<F: PrimeField>(d: &[F], lo: u64) -> (Vec<F>, Vec<F>) {
    if d.len() <= 32 {
        let mut g = vec![*d.last().unwrap()];
        for n in (0..d.len() - 1).rev() {
            let root = F::from(lo + n as u64);
            g.insert(0, F::ZERO);
            for t in 0..g.len() - 1 {
                let next = g[t + 1];
                g[t] -= next * root;
            }
            g[0] += d[n];
        }
        let mut p = vec![F::ONE];
        for n in 0..d.len() as u64 {
            let root = F::from(lo + n);
            p.push(F::ZERO);
            for t in (1..p.len()).rev() {
                p[t] = p[t - 1] - p[t] * root;
            }
            p[0] = -p[0] * root;
        }
        return (g, p);
    }
    let mid = d.len() / 2;
    let (gl, pl) = newton_to_monomial(&d[..mid], lo);
    let (gr, pr) = newton_to_monomial(&d[mid..], lo + mid as u64);
    let mut g = convolve(&pl, &gr);
    for (o, c) in g.iter_mut().zip(&gl) {
        *o += c;
    }
    (g, convolve(&pl, &pr))
}
