use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use super::payload::{self, decode_record, DataPayload, Payload, RefreshPayload, RefreshVariant};
use super::{peel, NodeId, Packet, ProtocolError};
use crate::crypto::{CipherSuite, Nonce, PublicKey, SinkKeyPair, SymmetricKey, KEY_LEN};

/// Why the sink dropped an otherwise well-formed payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Error)]
pub enum Discard {
    #[error("nonce already seen")]
    Replay,
    #[error("MAC mismatch")]
    BadMac,
    #[error("wrapped key names a different node")]
    IdMismatch,
    #[error("key material cannot be recovered")]
    BadKeyMaterial,
}

/// A fully unwrapped packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unwrapped {
    pub payload: Payload,
    /// Layer encryptors, outermost first; the last one is the origin.
    pub encryptors: Vec<NodeId>,
}

/// Outcome of [`SinkState::receive`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Delivery {
    Measurement { origin: NodeId, m: Vec<u8> },
    KeyInstalled { origin: NodeId, version: u32 },
    Discarded { origin: NodeId, reason: Discard },
}

/// The sink: one key per node, a replay cache, and its own key pair.
#[derive(Debug, Clone)]
pub struct SinkState {
    key_table: BTreeMap<NodeId, SymmetricKey>,
    seen_nonces: HashSet<(NodeId, Nonce)>,
    keypair: SinkKeyPair,
}

impl SinkState {
    pub fn new(keypair: SinkKeyPair) -> Self {
        Self {
            key_table: BTreeMap::new(),
            seen_nonces: HashSet::new(),
            keypair,
        }
    }

    pub fn register(&mut self, id: NodeId, key: SymmetricKey) {
        self.key_table.insert(id, key);
    }

    pub fn key_for(&self, id: NodeId) -> Option<&SymmetricKey> {
        self.key_table.get(&id)
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.keypair.public
    }

    pub fn node_count(&self) -> usize {
        self.key_table.len()
    }

    pub fn seen_count(&self) -> usize {
        self.seen_nonces.len()
    }

    /// Peels every layer using the key table. Does not touch the replay cache.
    pub fn unwrap(&self, suite: &dyn CipherSuite, p: &Packet) -> Result<Unwrapped, ProtocolError> {
        let peeled = peel(suite, p, |id| self.key_table.get(&id))?;
        let origin = *peeled.encryptors.last().expect("at least one layer");
        let payload = decode_record(&peeled.record, origin, suite.mac_len())?;
        Ok(Unwrapped {
            payload,
            encryptors: peeled.encryptors,
        })
    }

    /// Replay check, then MAC check; records the nonce only on acceptance.
    pub fn verify_data(&mut self, suite: &dyn CipherSuite, d: &DataPayload) -> Result<Vec<u8>, Discard> {
        let key = self.key_table.get(&d.origin).ok_or(Discard::BadMac)?;
        if self.seen_nonces.contains(&(d.origin, d.nonce)) {
            return Err(Discard::Replay);
        }
        let input = payload::data_mac_input(&d.m, &d.nonce, d.origin);
        if !suite.verify_mac(key, &input, &d.mac) {
            return Err(Discard::BadMac);
        }
        self.seen_nonces.insert((d.origin, d.nonce));
        Ok(d.m.clone())
    }

    /// Validates a refresh and installs the new key one version ahead of the
    /// current one. Returns the installed key.
    pub fn process_refresh(&mut self, suite: &dyn CipherSuite, r: &RefreshPayload) -> Result<SymmetricKey, Discard> {
        let current = self.key_table.get(&r.origin).ok_or(Discard::BadMac)?;
        if self.seen_nonces.contains(&(r.origin, r.nonce)) {
            return Err(Discard::Replay);
        }
        let input = payload::refresh_mac_input(r.variant, &r.key_material, &r.nonce, r.origin);
        if !suite.verify_mac(current, &input, &r.mac) {
            return Err(Discard::BadMac);
        }
        let version = current.version() + 1;
        let new_key = match r.variant {
            RefreshVariant::Symmetric => {
                SymmetricKey::from_slice(&r.key_material, version).map_err(|_| Discard::BadKeyMaterial)?
            }
            RefreshVariant::Wrapped => {
                let plain = suite
                    .pke_decrypt(&self.keypair.private, &r.key_material)
                    .map_err(|_| Discard::BadKeyMaterial)?;
                if plain.len() != 2 + KEY_LEN {
                    return Err(Discard::BadKeyMaterial);
                }
                let named = NodeId(u16::from_be_bytes([plain[0], plain[1]]));
                if named != r.origin {
                    return Err(Discard::IdMismatch);
                }
                SymmetricKey::from_slice(&plain[2..], version).map_err(|_| Discard::BadKeyMaterial)?
            }
        };
        self.seen_nonces.insert((r.origin, r.nonce));
        self.key_table.insert(r.origin, new_key.clone());
        Ok(new_key)
    }

    /// Unwraps and then verifies or installs, as appropriate.
    pub fn receive(&mut self, suite: &dyn CipherSuite, p: &Packet) -> Result<Delivery, ProtocolError> {
        let unwrapped = self.unwrap(suite, p)?;
        let origin = unwrapped.payload.origin();
        Ok(match unwrapped.payload {
            Payload::Data(d) => match self.verify_data(suite, &d) {
                Ok(m) => Delivery::Measurement { origin, m },
                Err(reason) => Delivery::Discarded { origin, reason },
            },
            Payload::Refresh(r) => match self.process_refresh(suite, &r) {
                Ok(k) => Delivery::KeyInstalled {
                    origin,
                    version: k.version(),
                },
                Err(reason) => Delivery::Discarded { origin, reason },
            },
        })
    }
}
