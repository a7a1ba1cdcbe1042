//! Byte files as field elements, 31 bytes per scalar.
//!
//! Every scalar carries 31 little-endian data bytes and a zero top byte,
//! except the last, whose top byte holds the length (1..=31) of the final
//! block. The descriptor is therefore part of the committed data and costs
//! nothing extra on the wire.

use blstrs::Scalar;
use thiserror::Error;

/// Data bytes per scalar.
pub const BLOCK_BYTES: usize = 31;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodingError {
    #[error("cannot encode an empty file")]
    Empty,
    #[error("symbol {0} is not a valid file block")]
    Corrupt(usize),
}

/// Length of the final block, stored in the top byte of the last scalar.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Padding {
    pub last_block_len: u8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FileEncoding {
    pub scalars: Vec<Scalar>,
    pub padding: Padding,
}

impl FileEncoding {
    /// Degree bound of the interpolating polynomial.
    pub fn ell(&self) -> usize {
        self.scalars.len() - 1
    }

    pub fn byte_len(&self) -> usize {
        (self.scalars.len() - 1) * BLOCK_BYTES + self.padding.last_block_len as usize
    }
}

/// Number of scalars a file of `len` bytes occupies.
pub fn scalars_for(len: usize) -> usize {
    len.div_ceil(BLOCK_BYTES)
}

pub fn encode_file(bytes: &[u8]) -> Result<FileEncoding, EncodingError> {
    if bytes.is_empty() {
        return Err(EncodingError::Empty);
    }
    let n = scalars_for(bytes.len());
    let mut scalars = Vec::with_capacity(n);
    for (k, block) in bytes.chunks(BLOCK_BYTES).enumerate() {
        let mut repr = [0u8; 32];
        repr[..block.len()].copy_from_slice(block);
        if k + 1 == n {
            repr[31] = block.len() as u8;
        }
        scalars.push(Scalar::from_bytes_le(&repr).expect("top byte below 32 keeps the value in range"));
    }
    let last = bytes.len() - (n - 1) * BLOCK_BYTES;
    Ok(FileEncoding { scalars, padding: Padding { last_block_len: last as u8 } })
}

/// Inverse of [`encode_file`]; rejects any scalar that no file maps to.
pub fn decode_file(scalars: &[Scalar]) -> Result<Vec<u8>, EncodingError> {
    if scalars.is_empty() {
        return Err(EncodingError::Empty);
    }
    let n = scalars.len();
    let mut out = Vec::with_capacity(n * BLOCK_BYTES);
    for (k, s) in scalars.iter().enumerate() {
        out.extend_from_slice(&decode_block(s, k, k + 1 == n)?);
    }
    Ok(out)
}

/// Decodes the blocks at `positions` of a file with `n` scalars, as bought
/// in a subset purchase.
pub fn decode_blocks(positions: &[u64], scalars: &[Scalar], n: usize) -> Result<Vec<u8>, EncodingError> {
    let mut out = Vec::with_capacity(positions.len() * BLOCK_BYTES);
    for (p, s) in positions.iter().zip(scalars) {
        let k = *p as usize;
        out.extend_from_slice(&decode_block(s, k, k + 1 == n)?);
    }
    Ok(out)
}

fn decode_block(s: &Scalar, k: usize, last: bool) -> Result<Vec<u8>, EncodingError> {
    let repr = s.to_bytes_le();
    let len = if last {
        let len = repr[31] as usize;
        if len == 0 || len > BLOCK_BYTES || repr[len..31].iter().any(|b| *b != 0) {
            return Err(EncodingError::Corrupt(k));
        }
        len
    } else {
        if repr[31] != 0 {
            return Err(EncodingError::Corrupt(k));
        }
        BLOCK_BYTES
    };
    Ok(repr[..len].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ff::Field;
    use proptest::prelude::*;
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn one_byte() {
        let e = encode_file(&[0xab]).unwrap();
        assert_eq!((e.scalars.len(), e.padding.last_block_len, e.byte_len()), (1, 1, 1));
        assert_eq!(decode_file(&e.scalars).unwrap(), vec![0xab]);
    }

    #[test]
    fn aligned_files_use_whole_blocks() {
        let data = vec![7u8; 31 * 4];
        let e = encode_file(&data).unwrap();
        assert_eq!(e.scalars.len(), 4);
        assert_eq!(e.padding.last_block_len, 31);
        assert_eq!(decode_file(&e.scalars).unwrap(), data);
    }

    #[test]
    fn empty_and_corrupt() {
        assert_eq!(encode_file(&[]), Err(EncodingError::Empty));
        let mut e = encode_file(&[1u8; 40]).unwrap();
        e.scalars[0] = -Scalar::ONE;
        assert_eq!(decode_file(&e.scalars), Err(EncodingError::Corrupt(0)));
        let e = encode_file(&[1u8; 40]).unwrap();
        // A trailing zero-length descriptor is never produced.
        let mut bad = e.scalars.clone();
        bad[1] = Scalar::from(5u64);
        assert_eq!(decode_file(&bad), Err(EncodingError::Corrupt(1)));
    }

    #[test]
    fn one_mebibyte_roundtrip() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let mut data = vec![0u8; 1 << 20];
        rng.fill_bytes(&mut data);
        let e = encode_file(&data).unwrap();
        assert_eq!(e.scalars.len(), scalars_for(1 << 20));
        assert_eq!(decode_file(&e.scalars).unwrap(), data);
    }

    #[test]
    fn subset_blocks() {
        let data: Vec<u8> = (0..100u8).collect();
        let e = encode_file(&data).unwrap();
        let pos = [1u64, 3];
        let picked: Vec<Scalar> = pos.iter().map(|p| e.scalars[*p as usize]).collect();
        let out = decode_blocks(&pos, &picked, e.scalars.len()).unwrap();
        assert_eq!(&out[..31], &data[31..62]);
        assert_eq!(&out[31..], &data[93..]);
    }

    proptest! {
        #[test]
        fn prop_roundtrip(data in proptest::collection::vec(any::<u8>(), 1..400)) {
            let e = encode_file(&data).unwrap();
            prop_assert_eq!(e.byte_len(), data.len());
            prop_assert_eq!(decode_file(&e.scalars).unwrap(), data);
        }
    }
}
