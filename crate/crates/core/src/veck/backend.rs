//! Pluggable proof systems for relations that are not algebraic over the
//! pairing groups (hash-derived masks, SHA-256 hashlocks).

use crate::{Error, Result};

/// Whether a session may use backends that are not zero-knowledge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SessionMode {
    Production,
    TestOnly,
}

/// Backend identifiers carried on the wire.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum BackendId {
    Transparent = 0,
    Circuit = 1,
}

impl TryFrom<u8> for BackendId {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(BackendId::Transparent),
            1 => Ok(BackendId::Circuit),
            _ => Err(Error::encoding(format!("unknown proof backend {v}"))),
        }
    }
}

/// An NP relation with a canonical witness encoding.
pub trait Relation {
    type Statement<'a>;
    type Witness;

    fn holds(statement: &Self::Statement<'_>, witness: &Self::Witness) -> bool;
    fn encode_witness(witness: &Self::Witness) -> Vec<u8>;
    fn decode_witness(bytes: &[u8]) -> Result<Self::Witness>;
}

pub trait ConsistencyBackend<R: Relation> {
    fn id(&self) -> BackendId;
    fn prove(&self, statement: &R::Statement<'_>, witness: &R::Witness) -> Result<Vec<u8>>;
    /// `Err` means the backend could not run; `Ok(false)` is a rejection.
    fn verify(&self, statement: &R::Statement<'_>, proof: &[u8]) -> Result<bool>;
}

/// Ships the witness and re-checks the relation. Not zero-knowledge:
/// refuses to run outside test-only sessions.
#[derive(Clone, Copy, Debug)]
pub struct TransparentBackend {
    mode: SessionMode,
}

impl TransparentBackend {
    pub fn new(mode: SessionMode) -> Self {
        Self { mode }
    }

    fn guard(&self) -> Result<()> {
        match self.mode {
            SessionMode::TestOnly => Ok(()),
            SessionMode::Production => Err(Error::TestOnlyBackend),
        }
    }
}

impl<R: Relation> ConsistencyBackend<R> for TransparentBackend {
    fn id(&self) -> BackendId {
        BackendId::Transparent
    }

    fn prove(&self, statement: &R::Statement<'_>, witness: &R::Witness) -> Result<Vec<u8>> {
        self.guard()?;
        if !R::holds(statement, witness) {
            return Err(Error::domain("witness does not satisfy the relation"));
        }
        Ok(R::encode_witness(witness))
    }

    fn verify(&self, statement: &R::Statement<'_>, proof: &[u8]) -> Result<bool> {
        self.guard()?;
        match R::decode_witness(proof) {
            Ok(w) => Ok(R::holds(statement, &w)),
            Err(_) => Ok(false),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `x * x = y` over u64.
    struct Square;

    impl Relation for Square {
        type Statement<'a> = u64;
        type Witness = u64;

        fn holds(y: &u64, x: &u64) -> bool {
            x.checked_mul(*x) == Some(*y)
        }

        fn encode_witness(x: &u64) -> Vec<u8> {
            x.to_le_bytes().to_vec()
        }

        fn decode_witness(bytes: &[u8]) -> Result<u64> {
            Ok(u64::from_le_bytes(bytes.try_into().map_err(|_| Error::encoding("len"))?))
        }
    }

    #[test]
    fn transparent_backend_checks_the_relation() {
        let b = TransparentBackend::new(SessionMode::TestOnly);
        let proof = ConsistencyBackend::<Square>::prove(&b, &49, &7).unwrap();
        assert!(ConsistencyBackend::<Square>::verify(&b, &49, &proof).unwrap());
        assert!(!ConsistencyBackend::<Square>::verify(&b, &50, &proof).unwrap());
        assert!(!ConsistencyBackend::<Square>::verify(&b, &49, &[1, 2]).unwrap());
        assert!(ConsistencyBackend::<Square>::prove(&b, &49, &8).is_err());
    }

    #[test]
    fn transparent_backend_refuses_production() {
        let b = TransparentBackend::new(SessionMode::Production);
        assert!(matches!(ConsistencyBackend::<Square>::prove(&b, &49, &7), Err(Error::TestOnlyBackend)));
        assert!(matches!(ConsistencyBackend::<Square>::verify(&b, &49, &[7, 0, 0, 0, 0, 0, 0, 0]), Err(Error::TestOnlyBackend)));
        assert_eq!(BackendId::try_from(1).unwrap(), BackendId::Circuit);
        assert!(BackendId::try_from(9).is_err());
    }
}
