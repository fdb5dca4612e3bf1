use aes_gcm_siv::aead::{Aead, KeyInit};
use aes_gcm_siv::{Aes128GcmSiv, Nonce as SivNonce};
use hmac::{Hmac, Mac};
use rand::RngCore;
use sha2::{Digest, Sha256};
use x25519_dalek::{PublicKey as XPublic, StaticSecret};

use super::{CipherSuite, CryptoError, MacTag, PrivateKey, PublicKey, SinkKeyPair, SymmetricKey, KEY_LEN};

const TAG_LEN: usize = 16;
const MAC_LEN: usize = 16;
const X25519_LEN: usize = 32;
const KDF_LABEL: &[u8] = b"gossicrypt/pke/x25519-aes128gcmsiv";

/// AES-128-GCM-SIV with a fixed nonce, HMAC-SHA256/128, and X25519 hybrid
/// encryption.
///
/// GCM-SIV is nonce-misuse resistant, so a fixed nonce only reveals equality
/// of identical plaintexts under the same key. Every protocol plaintext
/// carries a fresh random nonce, so layers never repeat.
#[derive(Debug, Clone, Copy, Default)]
pub struct StandardSuite;

fn aead(key: &[u8; KEY_LEN]) -> Aes128GcmSiv {
    Aes128GcmSiv::new(key.into())
}

const FIXED_NONCE: [u8; 12] = [0u8; 12];

fn seal(key: &[u8; KEY_LEN], plaintext: &[u8]) -> Vec<u8> {
    aead(key)
        .encrypt(SivNonce::from_slice(&FIXED_NONCE), plaintext)
        .expect("AES-GCM-SIV encryption is infallible for in-memory buffers")
}

fn open(key: &[u8; KEY_LEN], ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
    aead(key)
        .decrypt(SivNonce::from_slice(&FIXED_NONCE), ciphertext)
        .map_err(|_| CryptoError::DecryptFailed)
}

fn derive_wrap_key(shared: &[u8], ephemeral: &[u8], recipient: &[u8]) -> [u8; KEY_LEN] {
    let digest = Sha256::new()
        .chain_update(KDF_LABEL)
        .chain_update(shared)
        .chain_update(ephemeral)
        .chain_update(recipient)
        .finalize();
    let mut key = [0u8; KEY_LEN];
    key.copy_from_slice(&digest[..KEY_LEN]);
    key
}

fn x25519_public(bytes: &[u8]) -> Result<XPublic, CryptoError> {
    let arr: [u8; X25519_LEN] = bytes.try_into().map_err(|_| CryptoError::InvalidKeyLength {
        expected: X25519_LEN,
        got: bytes.len(),
    })?;
    Ok(XPublic::from(arr))
}

fn x25519_secret(bytes: &[u8]) -> Result<StaticSecret, CryptoError> {
    let arr: [u8; X25519_LEN] = bytes.try_into().map_err(|_| CryptoError::InvalidKeyLength {
        expected: X25519_LEN,
        got: bytes.len(),
    })?;
    Ok(StaticSecret::from(arr))
}

impl CipherSuite for StandardSuite {
    fn name(&self) -> &'static str {
        "standard"
    }

    fn ske_encrypt(&self, key: &SymmetricKey, plaintext: &[u8]) -> Vec<u8> {
        seal(key.bytes(), plaintext)
    }

    fn ske_decrypt(&self, key: &SymmetricKey, ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
        open(key.bytes(), ciphertext)
    }

    fn ske_overhead(&self) -> usize {
        TAG_LEN
    }

    fn mac(&self, key: &SymmetricKey, message: &[u8]) -> MacTag {
        let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(key.bytes()).expect("HMAC accepts keys of any length");
        mac.update(message);
        MacTag::new(mac.finalize().into_bytes()[..MAC_LEN].to_vec())
    }

    fn mac_len(&self) -> usize {
        MAC_LEN
    }

    fn generate_keypair(&self, rng: &mut dyn RngCore) -> SinkKeyPair {
        let mut raw = [0u8; X25519_LEN];
        rng.fill_bytes(&mut raw);
        let secret = StaticSecret::from(raw);
        let public = XPublic::from(&secret);
        SinkKeyPair {
            public: PublicKey(public.as_bytes().to_vec()),
            private: PrivateKey(secret.to_bytes().to_vec()),
        }
    }

    /// Output layout: `ephemeral_public (32) || AES-GCM-SIV(plaintext)`.
    fn pke_encrypt(&self, public: &PublicKey, plaintext: &[u8], rng: &mut dyn RngCore) -> Result<Vec<u8>, CryptoError> {
        let recipient = x25519_public(&public.0)?;
        let mut raw = [0u8; X25519_LEN];
        rng.fill_bytes(&mut raw);
        let ephemeral = StaticSecret::from(raw);
        let ephemeral_public = XPublic::from(&ephemeral);
        let shared = ephemeral.diffie_hellman(&recipient);
        let key = derive_wrap_key(shared.as_bytes(), ephemeral_public.as_bytes(), &public.0);
        let mut out = ephemeral_public.as_bytes().to_vec();
        out.extend(seal(&key, plaintext));
        Ok(out)
    }

    fn pke_decrypt(&self, private: &PrivateKey, ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
        if ciphertext.len() < X25519_LEN + TAG_LEN {
            return Err(CryptoError::DecryptFailed);
        }
        let secret = x25519_secret(&private.0)?;
        let (eph, body) = ciphertext.split_at(X25519_LEN);
        let ephemeral_public = x25519_public(eph)?;
        let shared = secret.diffie_hellman(&ephemeral_public);
        if !shared.was_contributory() {
            return Err(CryptoError::DecryptFailed);
        }
        let own_public = XPublic::from(&secret);
        let key = derive_wrap_key(shared.as_bytes(), eph, own_public.as_bytes());
        open(&key, body)
    }
}
