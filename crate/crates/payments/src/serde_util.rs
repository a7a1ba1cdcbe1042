//! Serde adapters for curve points, scalars and raw bytes (hex strings).

use blstrs::{G1Affine, Scalar};
use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

fn decode_hex<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
    let s = String::deserialize(d)?;
    hex::decode(s).map_err(D::Error::custom)
}

pub mod bytes {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        decode_hex(d)
    }
}

pub mod array32 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        decode_hex(d)?.try_into().map_err(|_| D::Error::custom("expected 32 bytes"))
    }
}

pub mod g1 {
    use super::*;

    pub fn serialize<S: Serializer>(p: &G1Affine, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(p.to_compressed()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<G1Affine, D::Error> {
        let raw: [u8; 48] = decode_hex(d)?.try_into().map_err(|_| D::Error::custom("expected 48 bytes"))?;
        Option::from(G1Affine::from_compressed(&raw)).ok_or_else(|| D::Error::custom("invalid G1 point"))
    }
}

pub mod opt_scalar {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<Scalar>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_some(&hex::encode(x.to_bytes_le())),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Scalar>, D::Error> {
        let Some(s) = Option::<String>::deserialize(d)? else { return Ok(None) };
        let raw = hex::decode(s).map_err(D::Error::custom)?;
        crate::parse_secret(&raw).map(Some).ok_or_else(|| D::Error::custom("invalid scalar"))
    }
}
