use std::collections::VecDeque;

use rand::{Rng, RngCore};

use super::payload::{self, encode_record, RefreshVariant, DEFAULT_PAYLOAD_BUDGET, KIND_DATA};
use super::{NodeId, Packet, ProtocolError};
use crate::crypto::{CipherSuite, Nonce, PublicKey, SymmetricKey, KEY_LEN};

/// Number of past measurements a node keeps in memory by default.
pub const DEFAULT_HISTORY_WINDOW: usize = 1;

/// Protocol state held by one sensor node.
#[derive(Debug, Clone)]
pub struct NodeProtocolState {
    id: NodeId,
    key: SymmetricKey,
    q: f64,
    pending_refresh: Option<SymmetricKey>,
    deferred: Option<Vec<u8>>,
    history: VecDeque<Vec<u8>>,
    history_window: usize,
    payload_budget: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReportKind {
    Data,
    /// The report slot carried a key refresh; `new_key` is now the node's key.
    Refresh {
        new_key: SymmetricKey,
    },
}

/// What a node transmits in one reporting epoch.
#[derive(Debug, Clone)]
pub struct Report {
    pub packet: Packet,
    pub kind: ReportKind,
}

impl NodeProtocolState {
    pub fn new(id: NodeId, key: SymmetricKey, q: f64) -> Result<Self, ProtocolError> {
        if !(q > 0.0 && q < 1.0) {
            return Err(ProtocolError::InvalidProbability(q));
        }
        Ok(Self {
            id,
            key,
            q,
            pending_refresh: None,
            deferred: None,
            history: VecDeque::new(),
            history_window: DEFAULT_HISTORY_WINDOW,
            payload_budget: DEFAULT_PAYLOAD_BUDGET,
        })
    }

    pub fn with_payload_budget(mut self, budget: usize) -> Self {
        self.payload_budget = budget.max(1);
        self
    }

    pub fn with_history_window(mut self, window: usize) -> Self {
        self.history_window = window;
        self
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn key(&self) -> &SymmetricKey {
        &self.key
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn pending_refresh(&self) -> Option<&SymmetricKey> {
        self.pending_refresh.as_ref()
    }

    /// Measurements still held in memory, oldest first.
    pub fn history(&self) -> impl Iterator<Item = &[u8]> {
        self.history.iter().map(Vec::as_slice)
    }

    /// Encrypts measurement `m` as a fresh one-layer packet.
    pub fn source_encrypt(&self, suite: &dyn CipherSuite, m: &[u8], rng: &mut dyn RngCore) -> Packet {
        self.seal_data(suite, m, Nonce::random(rng))
    }

    /// [`source_encrypt`](Self::source_encrypt) with an explicit nonce.
    pub fn seal_data(&self, suite: &dyn CipherSuite, m: &[u8], nonce: Nonce) -> Packet {
        let mac = suite.mac(&self.key, &payload::data_mac_input(m, &nonce, self.id));
        let record = encode_record(KIND_DATA, m, &nonce, &mac, self.payload_budget);
        Packet::from_source(self.id, suite.ske_encrypt(&self.key, &record))
    }

    /// The relay coin: `true` means re-encrypt. Draws `x` uniform in `[0, 1)`
    /// and re-encrypts unless `x > q`.
    pub fn coin(&self, rng: &mut dyn RngCore) -> bool {
        rng.random::<f64>() <= self.q
    }

    pub fn relay_process(&self, suite: &dyn CipherSuite, p: Packet, rng: &mut dyn RngCore) -> Packet {
        let heads = self.coin(rng);
        self.relay_with_coin(suite, p, heads)
    }

    /// Relay step with the coin outcome supplied by the caller.
    pub fn relay_with_coin(&self, suite: &dyn CipherSuite, p: Packet, reencrypt: bool) -> Packet {
        if reencrypt {
            p.wrap(suite, self.id, &self.key)
        } else {
            p
        }
    }

    /// An RGen event fired: draw the next key and hold it until the next
    /// report slot.
    pub fn schedule_refresh(&mut self, rng: &mut dyn RngCore) {
        if self.pending_refresh.is_none() {
            self.pending_refresh = Some(self.key.successor(rng));
        }
    }

    /// Builds the refresh message for the pending key under the current key.
    ///
    /// With `sink_public` the new key is wrapped together with the node id
    /// to the sink's public key; without it the key travels raw inside the
    /// symmetric layer.
    pub fn refresh_build(
        &self,
        suite: &dyn CipherSuite,
        sink_public: Option<&PublicKey>,
        rng: &mut dyn RngCore,
    ) -> Result<(Packet, SymmetricKey), ProtocolError> {
        let new_key = self.pending_refresh.clone().ok_or(ProtocolError::NoPendingRefresh)?;
        let (variant, key_material) = match sink_public {
            None => (RefreshVariant::Symmetric, new_key.bytes().to_vec()),
            Some(pk) => (
                RefreshVariant::Wrapped,
                suite.pke_encrypt(pk, &wrap_plaintext(self.id, &new_key), rng)?,
            ),
        };
        let packet = self.seal_refresh(suite, variant, &key_material, Nonce::random(rng));
        Ok((packet, new_key))
    }

    /// Seals an already prepared refresh body. Deterministic.
    pub fn seal_refresh(
        &self,
        suite: &dyn CipherSuite,
        variant: RefreshVariant,
        key_material: &[u8],
        nonce: Nonce,
    ) -> Packet {
        let mac = suite.mac(
            &self.key,
            &payload::refresh_mac_input(variant, key_material, &nonce, self.id),
        );
        let record = encode_record(variant.flag(), key_material, &nonce, &mac, self.payload_budget);
        Packet::from_source(self.id, suite.ske_encrypt(&self.key, &record))
    }

    /// Switches to `key`. Clears a pending refresh.
    pub fn install_key(&mut self, key: SymmetricKey) {
        self.key = key;
        self.pending_refresh = None;
    }

    /// Produces this epoch's transmission for measurement `m`.
    ///
    /// If a refresh is pending, the slot carries the refresh message, the
    /// node switches to the new key, and `m` is held back; it is prepended to
    /// the next data report. Otherwise a data report is sent.
    pub fn next_report(
        &mut self,
        suite: &dyn CipherSuite,
        m: &[u8],
        sink_public: Option<&PublicKey>,
        rng: &mut dyn RngCore,
    ) -> Result<Report, ProtocolError> {
        self.remember(m);
        if self.pending_refresh.is_some() {
            let (packet, new_key) = self.refresh_build(suite, sink_public, rng)?;
            self.deferred.get_or_insert_with(Vec::new).extend_from_slice(m);
            self.install_key(new_key.clone());
            return Ok(Report {
                packet,
                kind: ReportKind::Refresh { new_key },
            });
        }
        let body = match self.deferred.take() {
            Some(mut held) => {
                held.extend_from_slice(m);
                held
            }
            None => m.to_vec(),
        };
        Ok(Report {
            packet: self.source_encrypt(suite, &body, rng),
            kind: ReportKind::Data,
        })
    }

    fn remember(&mut self, m: &[u8]) {
        if self.history_window == 0 {
            return;
        }
        while self.history.len() >= self.history_window {
            self.history.pop_front();
        }
        self.history.push_back(m.to_vec());
    }
}

/// Plaintext wrapped to the sink: `S_i || K'`.
pub(crate) fn wrap_plaintext(id: NodeId, key: &SymmetricKey) -> Vec<u8> {
    let mut out = Vec::with_capacity(2 + KEY_LEN);
    out.extend(id.to_be_bytes());
    out.extend(key.bytes());
    out
}
