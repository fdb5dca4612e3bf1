use super::{NodeId, ProtocolError};
use crate::crypto::{CipherSuite, SymmetricKey};

/// One `(encryptor, ciphertext)` pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub encryptor: NodeId,
    pub ciphertext: Vec<u8>,
}

impl Layer {
    fn encode(&self) -> Vec<u8> {
        let len = u16::try_from(self.ciphertext.len()).expect("layer ciphertext shorter than 64 KiB");
        let mut out = Vec::with_capacity(4 + self.ciphertext.len());
        out.extend(self.encryptor.to_be_bytes());
        out.extend(len.to_be_bytes());
        out.extend(&self.ciphertext);
        out
    }

    fn decode(bytes: &[u8]) -> Result<Layer, ProtocolError> {
        if bytes.len() < 4 {
            return Err(ProtocolError::Malformed("layer header truncated"));
        }
        let encryptor = NodeId(u16::from_be_bytes([bytes[0], bytes[1]]));
        let len = usize::from(u16::from_be_bytes([bytes[2], bytes[3]]));
        if bytes.len() != 4 + len {
            return Err(ProtocolError::Malformed("layer length mismatch"));
        }
        Ok(Layer {
            encryptor,
            ciphertext: bytes[4..].to_vec(),
        })
    }
}

/// A packet in flight. Only the outermost layer is visible; inner layers are
/// nested inside its ciphertext.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    layer_count: u8,
    outer: Layer,
}

impl Packet {
    pub(crate) fn from_source(origin: NodeId, ciphertext: Vec<u8>) -> Self {
        Packet {
            layer_count: 1,
            outer: Layer {
                encryptor: origin,
                ciphertext,
            },
        }
    }

    pub fn outer_id(&self) -> NodeId {
        self.outer.encryptor
    }

    pub fn layer_count(&self) -> u8 {
        self.layer_count
    }

    pub fn outer(&self) -> &Layer {
        &self.outer
    }

    /// Adds one layer under `key`, tagged with `encryptor`.
    ///
    /// The layer count is a single octet; a packet already carrying 255
    /// layers is returned unchanged.
    pub fn wrap(self, suite: &dyn CipherSuite, encryptor: NodeId, key: &SymmetricKey) -> Packet {
        if self.layer_count == u8::MAX {
            return self;
        }
        let ciphertext = suite.ske_encrypt(key, &self.outer.encode());
        Packet {
            layer_count: self.layer_count + 1,
            outer: Layer { encryptor, ciphertext },
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(3 + 4 + self.outer.ciphertext.len());
        out.extend(self.outer.encryptor.to_be_bytes());
        out.push(self.layer_count);
        out.extend(self.outer.encode());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Packet, ProtocolError> {
        if bytes.len() < 3 {
            return Err(ProtocolError::Malformed("packet header truncated"));
        }
        let outer_id = NodeId(u16::from_be_bytes([bytes[0], bytes[1]]));
        let layer_count = bytes[2];
        if layer_count == 0 {
            return Err(ProtocolError::Malformed("packet without layers"));
        }
        let outer = Layer::decode(&bytes[3..])?;
        if outer.encryptor != outer_id {
            return Err(ProtocolError::Malformed("outer id does not match outer layer"));
        }
        Ok(Packet { layer_count, outer })
    }

    pub fn wire_len(&self) -> usize {
        3 + 4 + self.outer.ciphertext.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum PeelFailure {
    UnknownNode(NodeId),
    DecryptFailed(NodeId),
    Malformed(&'static str),
}

impl From<PeelFailure> for ProtocolError {
    fn from(f: PeelFailure) -> Self {
        match f {
            PeelFailure::UnknownNode(id) => ProtocolError::UnknownNode(id),
            PeelFailure::DecryptFailed(id) => ProtocolError::DecryptFailed(id),
            PeelFailure::Malformed(why) => ProtocolError::Malformed(why),
        }
    }
}

pub(crate) struct Peeled {
    /// Encryptors, outermost first. The last entry is the source.
    pub encryptors: Vec<NodeId>,
    pub record: Vec<u8>,
}

/// Removes all layers of `packet`, looking up each layer's key by its
/// cleartext encryptor id. Shared by the sink and the adversary.
pub(crate) fn peel<'k, F>(suite: &dyn CipherSuite, packet: &Packet, mut key_of: F) -> Result<Peeled, PeelFailure>
where
    F: FnMut(NodeId) -> Option<&'k SymmetricKey>,
{
    let mut encryptors = Vec::with_capacity(usize::from(packet.layer_count));
    let mut layer = packet.outer.clone();
    for depth in (1..=packet.layer_count).rev() {
        let id = layer.encryptor;
        encryptors.push(id);
        let key = key_of(id).ok_or(PeelFailure::UnknownNode(id))?;
        let plain = suite
            .ske_decrypt(key, &layer.ciphertext)
            .map_err(|_| PeelFailure::DecryptFailed(id))?;
        if depth == 1 {
            return Ok(Peeled {
                encryptors,
                record: plain,
            });
        }
        layer = Layer::decode(&plain).map_err(|_| PeelFailure::Malformed("inner layer framing"))?;
    }
    unreachable!("layer_count is at least one")
}
