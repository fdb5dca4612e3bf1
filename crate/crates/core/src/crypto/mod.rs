//! Cryptographic primitives used by the protocol layer.
//!
//! Everything the protocol needs from cryptography goes through the
//! [`CipherSuite`] trait: symmetric encryption of a layer, a MAC over the
//! payload fields, and a public-key wrap used by the second key-refresh
//! variant. Two suites ship with the crate:
//!
//! - [`StandardSuite`]: AES-128-GCM-SIV, HMAC-SHA256 (truncated to 128 bits)
//!   and X25519-based hybrid encryption to the sink.
//! - [`ToySuite`]: deterministic, dependency-free primitives whose output is
//!   easy to reproduce byte-for-byte. Used for golden packet fixtures and for
//!   long simulation runs. Not secure.

mod standard;
mod toy;

use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use subtle::ConstantTimeEq;
use thiserror::Error;

pub use standard::StandardSuite;
pub use toy::ToySuite;

/// Symmetric key length in bytes (128-bit keys).
pub const KEY_LEN: usize = 16;

/// Protocol nonce length in bytes.
pub const NONCE_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("invalid key length: expected {expected} bytes, got {got}")]
    InvalidKeyLength { expected: usize, got: usize },
    #[error("decryption failed")]
    DecryptFailed,
    #[error("plaintext of {len} bytes exceeds the primitive's bound of {max}")]
    PlaintextTooLong { len: usize, max: usize },
}

/// A node-to-sink symmetric key together with its refresh generation.
///
/// Two keys compare equal only if both the bytes and the version match.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymmetricKey {
    bytes: [u8; KEY_LEN],
    version: u32,
}

impl SymmetricKey {
    pub fn new(bytes: [u8; KEY_LEN], version: u32) -> Self {
        Self { bytes, version }
    }

    pub fn from_slice(bytes: &[u8], version: u32) -> Result<Self, CryptoError> {
        let bytes: [u8; KEY_LEN] = bytes.try_into().map_err(|_| CryptoError::InvalidKeyLength {
            expected: KEY_LEN,
            got: bytes.len(),
        })?;
        Ok(Self { bytes, version })
    }

    pub fn generate(rng: &mut dyn RngCore, version: u32) -> Self {
        let mut bytes = [0u8; KEY_LEN];
        rng.fill_bytes(&mut bytes);
        Self { bytes, version }
    }

    /// Draws a fresh key one generation ahead of `self`.
    pub fn successor(&self, rng: &mut dyn RngCore) -> Self {
        Self::generate(rng, self.version + 1)
    }

    pub fn bytes(&self) -> &[u8; KEY_LEN] {
        &self.bytes
    }

    pub fn version(&self) -> u32 {
        self.version
    }
}

impl fmt::Debug for SymmetricKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Only a short fingerprint; never the full key.
        write!(
            f,
            "SymmetricKey(v{}, {:02x}{:02x}..)",
            self.version, self.bytes[0], self.bytes[1]
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Nonce([u8; NONCE_LEN]);

impl Nonce {
    pub fn new(bytes: [u8; NONCE_LEN]) -> Self {
        Self(bytes)
    }

    pub fn random(rng: &mut dyn RngCore) -> Self {
        let mut bytes = [0u8; NONCE_LEN];
        rng.fill_bytes(&mut bytes);
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; NONCE_LEN] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MacTag(Vec<u8>);

impl MacTag {
    pub fn new(bytes: Vec<u8>) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// Constant-time comparison.
    pub fn verify(&self, other: &MacTag) -> bool {
        self.0.len() == other.0.len() && bool::from(self.0.ct_eq(&other.0))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicKey(pub Vec<u8>);

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivateKey(pub Vec<u8>);

impl fmt::Debug for PrivateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PrivateKey(..)")
    }
}

/// The sink's asymmetric key pair.
#[derive(Debug, Clone)]
pub struct SinkKeyPair {
    pub public: PublicKey,
    pub private: PrivateKey,
}

/// Interface to the primitives the protocol is built on.
///
/// Implementations must be pure: the same inputs (including the bytes drawn
/// from `rng`) produce the same outputs.
pub trait CipherSuite: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn ske_encrypt(&self, key: &SymmetricKey, plaintext: &[u8]) -> Vec<u8>;

    fn ske_decrypt(&self, key: &SymmetricKey, ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError>;

    /// Fixed number of bytes a symmetric ciphertext adds to its plaintext.
    fn ske_overhead(&self) -> usize;

    fn mac(&self, key: &SymmetricKey, message: &[u8]) -> MacTag;

    fn mac_len(&self) -> usize;

    fn verify_mac(&self, key: &SymmetricKey, message: &[u8], tag: &MacTag) -> bool {
        self.mac(key, message).verify(tag)
    }

    fn generate_keypair(&self, rng: &mut dyn RngCore) -> SinkKeyPair;

    fn pke_encrypt(&self, public: &PublicKey, plaintext: &[u8], rng: &mut dyn RngCore) -> Result<Vec<u8>, CryptoError>;

    fn pke_decrypt(&self, private: &PrivateKey, ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError>;

    fn ciphertext_len(&self, plaintext_len: usize) -> usize {
        plaintext_len + self.ske_overhead()
    }
}

/// Selects one of the bundled suites by name (for configuration files).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteKind {
    #[default]
    Standard,
    Toy,
}

impl SuiteKind {
    pub fn build(self) -> Box<dyn CipherSuite> {
        match self {
            SuiteKind::Standard => Box::new(StandardSuite),
            SuiteKind::Toy => Box::new(ToySuite),
        }
    }
}

impl fmt::Display for SuiteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SuiteKind::Standard => "standard",
            SuiteKind::Toy => "toy",
        })
    }
}

impl std::str::FromStr for SuiteKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(SuiteKind::Standard),
            "toy" => Ok(SuiteKind::Toy),
            other => Err(format!("unknown cipher suite `{other}` (expected standard|toy)")),
        }
    }
}
