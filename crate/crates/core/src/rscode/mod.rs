//! Reed-Solomon coding over the integer domain `0..m`.
//!
//! A file of `ell + 1` symbols is the evaluation vector of a polynomial of
//! degree at most `ell`; the codeword appends its values at `ell+1..m`.
//! Decryption failures surface as erasures, and the decoder corrects any
//! mix of `e` errors and `s` erasures with `2e + s <= m - ell - 1`.

mod decode;
mod detect;

pub use decode::{rs_decode, Decoding};
pub use detect::{build_detector, rs_detect, syndrome, Detection, DetectorKey};

use std::io::{Read, Write};

use ff::PrimeField;

use crate::algebra::extend_consecutive;
use crate::{Error, Result};

/// Code dimensions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CodeParams {
    /// Degree bound; the code carries `ell + 1` data symbols.
    pub ell: usize,
    /// Codeword length.
    pub m: usize,
    /// Expansion rate the length was derived from.
    pub beta: f64,
}

impl CodeParams {
    /// `m = ceil(beta * (ell + 1))`, which must leave at least one parity
    /// symbol.
    pub fn new(ell: usize, beta: f64) -> Result<Self> {
        if !(beta > 1.0 && beta.is_finite()) {
            return Err(Error::domain(format!("expansion rate {beta} must exceed 1")));
        }
        let m = (beta * (ell + 1) as f64).ceil() as usize;
        if m < ell + 2 {
            return Err(Error::domain(format!(
                "rate {beta} leaves no parity symbols for {} data symbols",
                ell + 1
            )));
        }
        Ok(Self { ell, m, beta })
    }

    pub fn data_len(&self) -> usize {
        self.ell + 1
    }

    pub fn min_distance(&self) -> usize {
        self.m - self.ell
    }

    /// Number of errors correctable without erasures.
    pub fn radius(&self) -> usize {
        (self.m - self.ell - 1) / 2
    }
}

/// Received word: `None` marks an erased position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codeword<F> {
    pub symbols: Vec<Option<F>>,
}

impl<F: PrimeField> Codeword<F> {
    pub fn from_values(values: Vec<F>) -> Self {
        Self { symbols: values.into_iter().map(Some).collect() }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn erasures(&self) -> usize {
        self.symbols.iter().filter(|s| s.is_none()).count()
    }

    /// All values, or `None` if any position is erased.
    pub fn values(&self) -> Option<Vec<F>> {
        self.symbols.iter().copied().collect()
    }

    /// Diagnostic dump: `FDECW1`, `ell`, `m`, `beta` bits, then per symbol
    /// an erasure flag byte and the 32-byte little-endian value.
    pub fn write_dump(&self, params: &CodeParams, w: &mut impl Write) -> Result<()> {
        let mut buf = Vec::with_capacity(30 + self.len() * 33);
        buf.extend_from_slice(b"FDECW1");
        buf.extend_from_slice(&(params.ell as u64).to_le_bytes());
        buf.extend_from_slice(&(params.m as u64).to_le_bytes());
        buf.extend_from_slice(&params.beta.to_bits().to_le_bytes());
        for s in &self.symbols {
            let mut block = [0u8; 32];
            match s {
                Some(v) => {
                    buf.push(0);
                    let repr = v.to_repr();
                    block[..repr.as_ref().len()].copy_from_slice(repr.as_ref());
                }
                None => buf.push(1),
            }
            buf.extend_from_slice(&block);
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_dump(r: &mut impl Read) -> Result<(CodeParams, Self)> {
        let mut header = [0u8; 30];
        r.read_exact(&mut header)?;
        if &header[..6] != b"FDECW1" {
            return Err(Error::encoding("bad codeword dump magic"));
        }
        let word = |k: usize| u64::from_le_bytes(header[k..k + 8].try_into().unwrap());
        let params = CodeParams {
            ell: word(6) as usize,
            m: word(14) as usize,
            beta: f64::from_bits(word(22)),
        };
        let mut symbols = Vec::with_capacity(params.m);
        let mut block = [0u8; 33];
        for i in 0..params.m {
            r.read_exact(&mut block)?;
            symbols.push(match block[0] {
                1 => None,
                0 => {
                    let mut repr = F::Repr::default();
                    let n = repr.as_ref().len();
                    if block[1 + n..].iter().any(|b| *b != 0) {
                        return Err(Error::encoding(format!("symbol {i} out of range")));
                    }
                    repr.as_mut().copy_from_slice(&block[1..1 + n]);
                    let v = Option::from(F::from_repr(repr))
                        .ok_or_else(|| Error::encoding(format!("symbol {i} out of range")))?;
                    Some(v)
                }
                f => return Err(Error::encoding(format!("bad erasure flag {f}"))),
            });
        }
        Ok((params, Self { symbols }))
    }
}

/// Systematic encoding: the first `ell + 1` symbols are `data`.
pub fn rs_extend<F: PrimeField>(params: &CodeParams, data: &[F]) -> Result<Codeword<F>> {
    if data.len() != params.data_len() {
        return Err(Error::domain(format!(
            "expected {} data symbols, got {}",
            params.data_len(),
            data.len()
        )));
    }
    Ok(Codeword::from_values(extend_consecutive(data, params.m)?))
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
    fn params() {
        let p = CodeParams::new(127, 2.0).unwrap();
        assert_eq!((p.m, p.min_distance(), p.radius()), (256, 129, 64));
        assert_eq!(CodeParams::new(10, 1.5).unwrap().m, 17);
        assert!(CodeParams::new(10, 1.0).is_err());
    }

    #[test]
    fn extension_examples() {
        let p = CodeParams::new(1, 2.0).unwrap();
        let zero = rs_extend(&p, &[Scalar::ZERO; 2]).unwrap();
        assert_eq!(zero.values().unwrap(), vec![Scalar::ZERO; 4]);
        let line = rs_extend(&p, &[Scalar::from(1u64), Scalar::from(2u64)]).unwrap();
        assert_eq!(line.values().unwrap(), (1..=4u64).map(Scalar::from).collect::<Vec<_>>());
        assert!(rs_extend(&p, &[Scalar::ONE]).is_err());
    }

    #[test]
    fn extension_is_systematic() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let p = CodeParams::new(99, 2.0).unwrap();
        let data: Vec<Scalar> = (0..100).map(|_| Scalar::random(&mut rng)).collect();
        let cw = rs_extend(&p, &data).unwrap();
        assert_eq!(cw.len(), 200);
        assert_eq!(&cw.values().unwrap()[..100], &data[..]);
    }

    #[test]
    fn dump_roundtrip() {
        let p = CodeParams::new(3, 2.0).unwrap();
        let data: Vec<ToyField> = (1..=4u64).map(ToyField::from).collect();
        let mut cw = rs_extend(&p, &data).unwrap();
        cw.symbols[5] = None;
        let mut buf = Vec::new();
        cw.write_dump(&p, &mut buf).unwrap();
        assert_eq!(buf.len(), 30 + 8 * 33);
        let (p2, back) = Codeword::<ToyField>::read_dump(&mut buf.as_slice()).unwrap();
        assert_eq!(p2, p);
        assert_eq!(back, cw);

        let mut big = Vec::new();
        let scw = Codeword::from_values(vec![-Scalar::ONE; 8]);
        scw.write_dump(&p, &mut big).unwrap();
        assert_eq!(Codeword::<Scalar>::read_dump(&mut big.as_slice()).unwrap().1, scw);
        // The same bytes hold values too large for the toy field.
        assert!(Codeword::<ToyField>::read_dump(&mut big.as_slice()).is_err());
    }
}
