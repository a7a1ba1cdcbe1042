//! Stub signatures: HMAC-SHA256 under a key the ledger keeps in a registry.
//! Only the ledger can verify, which is all the simulation needs.

use std::collections::HashMap;

use hmac::{Hmac, Mac};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

type HmacSha256 = Hmac<Sha256>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PublicKeyId(#[serde(with = "crate::serde_util::array32")] pub [u8; 32]);

#[derive(Clone, Serialize, Deserialize)]
pub struct SigningKey {
    #[serde(with = "crate::serde_util::array32")]
    secret: [u8; 32],
}

impl std::fmt::Debug for SigningKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SigningKey").field("public", &self.public()).finish()
    }
}

impl SigningKey {
    pub fn generate(rng: &mut impl RngCore) -> Self {
        let mut secret = [0u8; 32];
        rng.fill_bytes(&mut secret);
        Self { secret }
    }

    pub fn public(&self) -> PublicKeyId {
        let mut h = Sha256::new();
        h.update(b"fde/stub-pk");
        h.update(self.secret);
        PublicKeyId(h.finalize().into())
    }

    pub fn sign(&self, msg: &[u8]) -> Vec<u8> {
        let mut mac = HmacSha256::new_from_slice(&self.secret).expect("any key length");
        mac.update(msg);
        mac.finalize().into_bytes().to_vec()
    }
}

/// Serialized as a list, since JSON maps need string keys.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(from = "Vec<SigningKey>", into = "Vec<SigningKey>")]
pub struct KeyRegistry {
    keys: HashMap<PublicKeyId, SigningKey>,
}

impl From<Vec<SigningKey>> for KeyRegistry {
    fn from(v: Vec<SigningKey>) -> Self {
        Self { keys: v.into_iter().map(|k| (k.public(), k)).collect() }
    }
}

impl From<KeyRegistry> for Vec<SigningKey> {
    fn from(r: KeyRegistry) -> Self {
        r.keys.into_values().collect()
    }
}

impl KeyRegistry {
    pub fn register(&mut self, key: &SigningKey) -> PublicKeyId {
        let id = key.public();
        self.keys.insert(id, key.clone());
        id
    }

    pub fn verify(&self, pk: &PublicKeyId, msg: &[u8], sig: &[u8]) -> bool {
        let Some(key) = self.keys.get(pk) else { return false };
        let mut mac = HmacSha256::new_from_slice(&key.secret).expect("any key length");
        mac.update(msg);
        mac.verify_slice(sig).is_ok()
    }
}
