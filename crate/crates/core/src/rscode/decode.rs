use ff::PrimeField;

use super::{CodeParams, Codeword};
use crate::algebra::{interpolate, vanishing, EvalDomain, Polynomial};
use crate::{Error, Result};

/// Decoder output. Failure is an expected outcome, not an error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decoding<F> {
    /// Evaluations of the corrected polynomial at the requested targets.
    Recovered(Vec<F>),
    Failure,
}

impl<F> Decoding<F> {
    pub fn recovered(self) -> Option<Vec<F>> {
        match self {
            Decoding::Recovered(v) => Some(v),
            Decoding::Failure => None,
        }
    }
}

/// Errors-and-erasures decoding (Gao's algorithm on the unerased
/// positions), then evaluation of the message polynomial at `targets`.
///
/// Any returned polynomial has degree `<= ell` and disagrees with the
/// received word in at most `(n' - ell - 1) / 2` unerased positions, where
/// `n'` counts those positions; otherwise the result is
/// [`Decoding::Failure`].
pub fn rs_decode<F: PrimeField>(
    params: &CodeParams,
    targets: &EvalDomain<F>,
    word: &Codeword<F>,
) -> Result<Decoding<F>> {
    if word.len() != params.m {
        return Err(Error::domain(format!("word length {} != {}", word.len(), params.m)));
    }
    match decode_polynomial(params, word)? {
        Some(f) => Ok(Decoding::Recovered(targets.points().iter().map(|x| f.eval(x)).collect())),
        None => Ok(Decoding::Failure),
    }
}

/// The message polynomial of the nearest codeword within the radius.
pub(crate) fn decode_polynomial<F: PrimeField>(
    params: &CodeParams,
    word: &Codeword<F>,
) -> Result<Option<Polynomial<F>>> {
    let k = params.data_len();
    let (idx, ys): (Vec<u64>, Vec<F>) = word
        .symbols
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|v| (i as u64, v)))
        .unzip();
    let n = idx.len();
    if n < k {
        return Ok(None);
    }
    let domain = EvalDomain::<F>::from_indices(&idx)?;
    let g0 = vanishing(domain.points());
    let g1 = interpolate(&domain, &ys)?;

    // Partial extended Euclid on (g0, g1), tracking the g1 cofactor.
    let stop = (n + k).div_ceil(2);
    let (mut r_prev, mut r) = (g0, g1);
    let (mut v_prev, mut v) = (Polynomial::zero(), Polynomial::constant(F::ONE));
    while r.degree().is_some_and(|d| d >= stop) {
        let (q, rem) = r_prev.div_rem(&r)?;
        let next_v = &v_prev - &(&q * &v);
        r_prev = std::mem::replace(&mut r, rem);
        v_prev = std::mem::replace(&mut v, next_v);
    }
    let (f, rem) = r.div_rem(&v)?;
    if !rem.is_zero() || f.degree().is_some_and(|d| d >= k) {
        return Ok(None);
    }
    let radius = (n - k) / 2;
    let mut disagreements = 0;
    for (x, y) in domain.points().iter().zip(&ys) {
        if f.eval(x) != *y {
            disagreements += 1;
            if disagreements > radius {
                return Ok(None);
            }
        }
    }
    Ok(Some(f))
}
