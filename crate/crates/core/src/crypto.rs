use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Algorithm id of the built-in keyed-hash scheme.
pub const MOCK_ALGORITHM: u8 = 0x00;

/// Serializes byte vectors as lowercase hex so certificates stay printable
/// in the structured-text exports.
mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(de)?;
        hex::decode(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicKey {
    pub algorithm: u8,
    #[serde(with = "hex_bytes")]
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub algorithm: u8,
    #[serde(with = "hex_bytes")]
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct KeyPair {
    pub algorithm: u8,
    secret: Vec<u8>,
    public: PublicKey,
}

impl KeyPair {
    pub fn public(&self) -> &PublicKey {
        &self.public
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("unsupported signature algorithm 0x{0:02x}")]
    UnsupportedAlgorithm(u8),
}

/// A pluggable signature scheme.
///
/// The certificate layer only needs deterministic signing and verification
/// keyed to an algorithm id; swapping in a standard production scheme means
/// implementing this trait and registering it in [`scheme_for`].
pub trait SignatureScheme: Sync {
    fn algorithm_id(&self) -> u8;
    fn keypair_from_seed(&self, seed: &[u8; 32]) -> KeyPair;
    fn sign(&self, key: &KeyPair, message: &[u8]) -> Signature;
    fn verify(&self, key: &PublicKey, message: &[u8], signature: &Signature) -> bool;
}

/// Keyed-hash scheme for simulation and tests.
///
/// The public key equals the secret key, so anyone holding a public key
/// could forge signatures. That is fine here: the scheme models the
/// authenticity structure of the hierarchy, not cryptographic strength.
struct MockScheme;

const MOCK_DOMAIN: &[u8] = b"keyed-hash-signature.v1";

impl MockScheme {
    fn tag(&self, secret: &[u8], message: &[u8]) -> Vec<u8> {
        let mut hasher = Sha256::new();
        hasher.update(MOCK_DOMAIN);
        hasher.update((secret.len() as u64).to_be_bytes());
        hasher.update(secret);
        hasher.update((message.len() as u64).to_be_bytes());
        hasher.update(message);
        hasher.finalize().to_vec()
    }
}

impl SignatureScheme for MockScheme {
    fn algorithm_id(&self) -> u8 {
        MOCK_ALGORITHM
    }

    fn keypair_from_seed(&self, seed: &[u8; 32]) -> KeyPair {
        let mut hasher = Sha256::new();
        hasher.update(b"keyed-hash-keygen.v1");
        hasher.update(seed);
        let secret = hasher.finalize().to_vec();
        KeyPair {
            algorithm: MOCK_ALGORITHM,
            public: PublicKey { algorithm: MOCK_ALGORITHM, bytes: secret.clone() },
            secret,
        }
    }

    fn sign(&self, key: &KeyPair, message: &[u8]) -> Signature {
        Signature { algorithm: MOCK_ALGORITHM, bytes: self.tag(&key.secret, message) }
    }

    fn verify(&self, key: &PublicKey, message: &[u8], signature: &Signature) -> bool {
        signature.algorithm == MOCK_ALGORITHM && signature.bytes == self.tag(&key.bytes, message)
    }
}

static MOCK: MockScheme = MockScheme;

pub fn scheme_for(algorithm: u8) -> Option<&'static dyn SignatureScheme> {
    match algorithm {
        MOCK_ALGORITHM => Some(&MOCK),
        _ => None,
    }
}

pub fn keypair_from_seed(algorithm: u8, seed: &[u8; 32]) -> Result<KeyPair, CryptoError> {
    scheme_for(algorithm)
        .map(|s| s.keypair_from_seed(seed))
        .ok_or(CryptoError::UnsupportedAlgorithm(algorithm))
}

pub fn sign(key: &KeyPair, message: &[u8]) -> Result<Signature, CryptoError> {
    scheme_for(key.algorithm)
        .map(|s| s.sign(key, message))
        .ok_or(CryptoError::UnsupportedAlgorithm(key.algorithm))
}

/// Returns false for unknown algorithms or a key/signature algorithm
/// mismatch rather than erroring; a verifier cannot do better.
pub fn verify(key: &PublicKey, message: &[u8], signature: &Signature) -> bool {
    if key.algorithm != signature.algorithm {
        return false;
    }
    match scheme_for(key.algorithm) {
        Some(scheme) => scheme.verify(key, message, signature),
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeded(tag: u8) -> KeyPair {
        keypair_from_seed(MOCK_ALGORITHM, &[tag; 32]).unwrap()
    }

    #[test]
    fn signatures_verify_under_the_matching_key_only() {
        let a = seeded(1);
        let b = seeded(2);
        let sig = sign(&a, b"tick 7").unwrap();
        assert!(verify(a.public(), b"tick 7", &sig));
        assert!(!verify(b.public(), b"tick 7", &sig));
    }

    #[test]
    fn tampered_message_fails() {
        let a = seeded(3);
        let sig = sign(&a, b"amount=10").unwrap();
        assert!(!verify(a.public(), b"amount=11", &sig));
    }

    #[test]
    fn signing_is_deterministic() {
        let a = seeded(4);
        assert_eq!(sign(&a, b"x").unwrap(), sign(&a, b"x").unwrap());
    }

    #[test]
    fn unknown_algorithm_is_an_error_on_sign_and_false_on_verify() {
        assert!(matches!(
            keypair_from_seed(0x42, &[0; 32]),
            Err(CryptoError::UnsupportedAlgorithm(0x42))
        ));
        let a = seeded(5);
        let mut sig = sign(&a, b"m").unwrap();
        sig.algorithm = 0x42;
        assert!(!verify(a.public(), b"m", &sig));
        let mut key = a.public().clone();
        key.algorithm = 0x42;
        sig.algorithm = 0x42;
        assert!(!verify(&key, b"m", &sig));
    }
}
