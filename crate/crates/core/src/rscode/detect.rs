use ff::PrimeField;

use super::{CodeParams, Codeword};
use crate::algebra::{extend_consecutive, FactorialTable, Transcript};
use crate::{Error, Result};

/// Outcome of the streaming validity test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Detection {
    Clean,
    Dirty,
}

/// Compressed parity check for one code.
///
/// The parity-check matrix has rows `H[r][j] = eta_j * j^r` for
/// `r = 0..m-ell-1`, with `eta_j = 1 / prod_{i != j} (j - i)`. For a random
/// nonzero `v`, the row `w = v^T H` satisfies `w . c = 0` for every codeword
/// and for any other word with probability `1/p`.
#[derive(Clone, Debug)]
pub struct DetectorKey<F> {
    pub params: CodeParams,
    pub eta: Vec<F>,
    pub w: Vec<F>,
}

fn dual_multipliers<F: PrimeField>(m: usize) -> Result<Vec<F>> {
    let t = FactorialTable::<F>::new(m - 1)?;
    Ok((0..m)
        .map(|j| {
            let e = t.inv_fact(j) * t.inv_fact(m - 1 - j);
            if (m - 1 - j) % 2 == 1 {
                -e
            } else {
                e
            }
        })
        .collect())
}

/// Derives `v` from `v_seed` and precomputes `w`.
///
/// `v` is held as the polynomial `v(X) = sum_r v_r X^r`, so that
/// `w_j = eta_j * v(j)`. It is sampled through its values at
/// `0..m-ell-1`, all nonzero, which fixes a uniformly random nonzero
/// coefficient vector.
pub fn build_detector<F: PrimeField>(params: &CodeParams, v_seed: &[u8]) -> Result<DetectorKey<F>> {
    let rows = params.m - params.ell - 1;
    let eta = dual_multipliers::<F>(params.m)?;
    let mut t = Transcript::new(b"fde/rs-detector");
    t.append(b"v-seed", v_seed);
    t.append_u64(b"ell", params.ell as u64);
    t.append_u64(b"m", params.m as u64);
    let mut stream = t.challenge_stream(b"v");
    let v_vals: Vec<F> = (0..rows)
        .map(|_| loop {
            let x: F = stream.scalar();
            if !bool::from(x.is_zero()) {
                break x;
            }
        })
        .collect();
    let v_at = extend_consecutive(&v_vals, params.m)?;
    let w = eta.iter().zip(&v_at).map(|(e, v)| *e * v).collect();
    Ok(DetectorKey { params: *params, eta, w })
}

/// One pass computing `T = sum_j w_j c_j`.
pub fn rs_detect<F: PrimeField>(key: &DetectorKey<F>, word: &Codeword<F>) -> Result<Detection> {
    if word.len() != key.params.m {
        return Err(Error::domain(format!("word length {} != {}", word.len(), key.params.m)));
    }
    let mut acc = F::ZERO;
    for (w, c) in key.w.iter().zip(&word.symbols) {
        acc += *w * c.ok_or(Error::ErasuresPresent)?;
    }
    Ok(if bool::from(acc.is_zero()) { Detection::Clean } else { Detection::Dirty })
}

/// Full syndrome `H c`, quadratic in the code length.
pub fn syndrome<F: PrimeField>(key: &DetectorKey<F>, word: &Codeword<F>) -> Result<Vec<F>> {
    let values = word.values().ok_or(Error::ErasuresPresent)?;
    if values.len() != key.params.m {
        return Err(Error::domain("word length does not match the code"));
    }
    let rows = key.params.m - key.params.ell - 1;
    let mut s = vec![F::ZERO; rows];
    for (j, (c, e)) in values.iter().zip(&key.eta).enumerate() {
        let alpha = F::from(j as u64);
        let mut term = *c * e;
        for sr in s.iter_mut() {
            *sr += term;
            term *= alpha;
        }
    }
    Ok(s)
}
