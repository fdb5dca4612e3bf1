//! Deterministic toy primitives built from FNV-1a.
//!
//! The construction is deliberately tiny so that an independent script can
//! reproduce packets byte-for-byte:
//!
//! - keystream block `j` (8 bytes) = `fnv1a64("ks" || key || be32(j))`, big endian
//! - `ske(key, p) = (p XOR keystream) || be64(fnv1a64("tag" || key || p))`
//! - `mac(key, m) = be64(fnv1a64("mac" || key || m))`
//! - PKE is ElGamal-style over the multiplicative group mod `2^61 - 1`, with
//!   the shared element expanded into a 16-byte key for `ske`.

use rand::RngCore;

use super::{CipherSuite, CryptoError, MacTag, PrivateKey, PublicKey, SinkKeyPair, SymmetricKey, KEY_LEN};

const TAG_LEN: usize = 8;
const MODULUS: u64 = (1 << 61) - 1;
const GENERATOR: u64 = 37;

#[derive(Debug, Clone, Copy, Default)]
pub struct ToySuite;

pub(crate) fn fnv1a64(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for &b in *part {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

fn xor_keystream(key: &[u8; KEY_LEN], data: &mut [u8]) {
    for (j, chunk) in data.chunks_mut(8).enumerate() {
        let block = fnv1a64(&[b"ks", key, &(j as u32).to_be_bytes()]).to_be_bytes();
        for (b, k) in chunk.iter_mut().zip(block) {
            *b ^= k;
        }
    }
}

fn toy_seal(key: &[u8; KEY_LEN], plaintext: &[u8]) -> Vec<u8> {
    let mut out = plaintext.to_vec();
    xor_keystream(key, &mut out);
    out.extend(fnv1a64(&[b"tag", key, plaintext]).to_be_bytes());
    out
}

fn toy_open(key: &[u8; KEY_LEN], ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
    if ciphertext.len() < TAG_LEN {
        return Err(CryptoError::DecryptFailed);
    }
    let (body, tag) = ciphertext.split_at(ciphertext.len() - TAG_LEN);
    let mut plain = body.to_vec();
    xor_keystream(key, &mut plain);
    if fnv1a64(&[b"tag", key, &plain]).to_be_bytes() != tag {
        return Err(CryptoError::DecryptFailed);
    }
    Ok(plain)
}

fn mul_mod(a: u64, b: u64) -> u64 {
    ((u128::from(a) * u128::from(b)) % u128::from(MODULUS)) as u64
}

fn pow_mod(mut base: u64, mut exp: u64) -> u64 {
    let mut acc = 1u64;
    base %= MODULUS;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base);
        }
        base = mul_mod(base, base);
        exp >>= 1;
    }
    acc
}

fn random_exponent(rng: &mut dyn RngCore) -> u64 {
    1 + rng.next_u64() % (MODULUS - 2)
}

fn wrap_key(shared: u64) -> [u8; KEY_LEN] {
    let s = shared.to_be_bytes();
    let mut key = [0u8; KEY_LEN];
    key[..8].copy_from_slice(&fnv1a64(&[b"wrap0", &s]).to_be_bytes());
    key[8..].copy_from_slice(&fnv1a64(&[b"wrap1", &s]).to_be_bytes());
    key
}

fn read_u64(bytes: &[u8]) -> Result<u64, CryptoError> {
    let arr: [u8; 8] = bytes.try_into().map_err(|_| CryptoError::DecryptFailed)?;
    Ok(u64::from_be_bytes(arr))
}

impl CipherSuite for ToySuite {
    fn name(&self) -> &'static str {
        "toy"
    }

    fn ske_encrypt(&self, key: &SymmetricKey, plaintext: &[u8]) -> Vec<u8> {
        toy_seal(key.bytes(), plaintext)
    }

    fn ske_decrypt(&self, key: &SymmetricKey, ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
        toy_open(key.bytes(), ciphertext)
    }

    fn ske_overhead(&self) -> usize {
        TAG_LEN
    }

    fn mac(&self, key: &SymmetricKey, message: &[u8]) -> MacTag {
        MacTag::new(fnv1a64(&[b"mac", key.bytes(), message]).to_be_bytes().to_vec())
    }

    fn mac_len(&self) -> usize {
        8
    }

    fn generate_keypair(&self, rng: &mut dyn RngCore) -> SinkKeyPair {
        let x = random_exponent(rng);
        SinkKeyPair {
            public: PublicKey(pow_mod(GENERATOR, x).to_be_bytes().to_vec()),
            private: PrivateKey(x.to_be_bytes().to_vec()),
        }
    }

    /// Output layout: `be64(g^y) || ske(wrap_key(pk^y), plaintext)`.
    fn pke_encrypt(&self, public: &PublicKey, plaintext: &[u8], rng: &mut dyn RngCore) -> Result<Vec<u8>, CryptoError> {
        let pk = read_u64(&public.0).map_err(|_| CryptoError::InvalidKeyLength {
            expected: 8,
            got: public.0.len(),
        })?;
        let y = random_exponent(rng);
        let mut out = pow_mod(GENERATOR, y).to_be_bytes().to_vec();
        out.extend(toy_seal(&wrap_key(pow_mod(pk, y)), plaintext));
        Ok(out)
    }

    fn pke_decrypt(&self, private: &PrivateKey, ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
        if ciphertext.len() < 8 + TAG_LEN {
            return Err(CryptoError::DecryptFailed);
        }
        let x = read_u64(&private.0)?;
        let c1 = read_u64(&ciphertext[..8])?;
        toy_open(&wrap_key(pow_mod(c1, x)), &ciphertext[8..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_matches_reference_vectors() {
        // Published FNV-1a 64-bit test vectors.
        assert_eq!(fnv1a64(&[b""]), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(&[b"a"]), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(&[b"foobar"]), 0x85944171f73967e8);
        assert_eq!(fnv1a64(&[b"foo", b"bar"]), fnv1a64(&[b"foobar"]));
    }

    #[test]
    fn pow_mod_small_cases() {
        assert_eq!(pow_mod(2, 10), 1024);
        assert_eq!(pow_mod(GENERATOR, 0), 1);
        // Fermat: a^(p-1) = 1 mod p for prime p.
        assert_eq!(pow_mod(GENERATOR, MODULUS - 1), 1);
    }
}
