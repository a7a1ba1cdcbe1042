//! Links the verification key to a SHA-256 hashlock: the server proves it
//! knows `sk` with `vk = h^sk` and `t = SHA-256(sk)`, so an HTLC locked to
//! `t` releases exactly the decryption key.

use blstrs::{G1Affine, Scalar};
use fde_core::veck::{ConsistencyBackend, Relation};
use group::Curve;

use crate::{hashlock, parse_secret};

pub struct BridgeStatement {
    pub h: G1Affine,
    pub vk: G1Affine,
    pub hashlock: [u8; 32],
}

pub struct BridgeRelation;

impl Relation for BridgeRelation {
    type Statement<'a> = BridgeStatement;
    type Witness = Scalar;

    fn holds(st: &BridgeStatement, sk: &Scalar) -> bool {
        hashlock(sk) == st.hashlock && (st.h * sk).to_affine() == st.vk
    }

    fn encode_witness(sk: &Scalar) -> Vec<u8> {
        sk.to_bytes_le().to_vec()
    }

    fn decode_witness(bytes: &[u8]) -> fde_core::Result<Scalar> {
        parse_secret(bytes).ok_or_else(|| fde_core::Error::Encoding("bad key encoding".into()))
    }
}

pub type BridgeBackend = dyn ConsistencyBackend<BridgeRelation>;

pub fn bridge_prove(backend: &BridgeBackend, st: &BridgeStatement, sk: &Scalar) -> fde_core::Result<Vec<u8>> {
    backend.prove(st, sk)
}

/// `Err` only when the backend cannot run.
pub fn bridge_verify(backend: &BridgeBackend, st: &BridgeStatement, proof: &[u8]) -> fde_core::Result<bool> {
    backend.verify(st, proof)
}

#[cfg(test)]
mod tests {
    use super::*;
    use blstrs::G1Projective;
    use fde_core::veck::{SessionMode, TransparentBackend};
    use group::Group;

    #[test]
    fn bridge_binds_hashlock_and_key() {
        let b = TransparentBackend::new(SessionMode::TestOnly);
        let h = (G1Projective::generator() * Scalar::from(5u64)).to_affine();
        let sk = Scalar::from(987654321u64);
        let st = BridgeStatement { h, vk: (h * sk).to_affine(), hashlock: hashlock(&sk) };
        let proof = bridge_prove(&b, &st, &sk).unwrap();
        assert!(bridge_verify(&b, &st, &proof).unwrap());

        let other = Scalar::from(2u64);
        let wrong_lock = BridgeStatement { hashlock: hashlock(&other), ..st };
        assert!(!bridge_verify(&b, &wrong_lock, &proof).unwrap());
        assert!(bridge_prove(&b, &wrong_lock, &sk).is_err());
        assert!(!bridge_verify(&b, &st, &[0xff; 32]).unwrap());

        let prod = TransparentBackend::new(SessionMode::Production);
        assert!(bridge_verify(&prod, &st, &proof).is_err());
    }
}
