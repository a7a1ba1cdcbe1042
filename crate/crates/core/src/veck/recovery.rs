use blstrs::Scalar;
use rand::RngCore;

use crate::algebra::{interpolate_consecutive, EvalDomain};
use crate::rscode::{build_detector, rs_decode, rs_detect, CodeParams, Codeword, Decoding, Detection};
use crate::Result;

/// Which branch of detect-then-correct produced the output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodePath {
    /// No erasures and the detector was clean; no decoding ran.
    Fast,
    /// The word went through the errors-and-erasures decoder.
    Corrected,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Recovery {
    pub decoding: Decoding<Scalar>,
    pub path: DecodePath,
}

/// Evaluates the message behind `word` at `targets`, skipping the decoder
/// when the word is complete and passes a freshly keyed detector.
pub fn detect_then_correct(
    code: &CodeParams,
    word: &Codeword<Scalar>,
    targets: &[u64],
    rng: &mut impl RngCore,
) -> Result<Recovery> {
    if let Some(values) = word.values() {
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        let key = build_detector(code, &seed)?;
        if rs_detect(&key, word)? == Detection::Clean {
            let out = if targets.iter().all(|t| (*t as usize) < values.len()) {
                targets.iter().map(|t| values[*t as usize]).collect()
            } else {
                let f = interpolate_consecutive(&values[..code.data_len()])?;
                targets.iter().map(|t| f.eval(&Scalar::from(*t))).collect()
            };
            return Ok(Recovery { decoding: Decoding::Recovered(out), path: DecodePath::Fast });
        }
    }
    let domain = EvalDomain::from_indices(targets)?;
    Ok(Recovery { decoding: rs_decode(code, &domain, word)?, path: DecodePath::Corrected })
}
