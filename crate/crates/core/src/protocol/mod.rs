//! The wire protocol: source encryption, probabilistic re-encryption at
//! relays, layered unwrapping at the sink, and key refreshing.
//!
//! A [`Packet`] is an onion: the outermost layer travels with its encryptor's
//! id in cleartext, and decrypting it yields the next `(encryptor, ciphertext)`
//! pair, down to the source's layer which holds a [`DataPayload`] or a
//! [`RefreshPayload`].
//!
//! Wire format (big endian):
//!
//! ```text
//! packet  = outer_id:u16 layer_count:u8 layer
//! layer   = encryptor_id:u16 ciphertext_len:u16 ciphertext
//! ```
//!
//! For `layer_count > 1` the outer ciphertext decrypts to the encoding of the
//! next `layer`; for the innermost layer it decrypts to a padded payload
//! record (see [`payload`]).

mod node;
mod packet;
pub mod payload;
mod rgen;
mod sink;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::CryptoError;

pub use node::{NodeProtocolState, Report, ReportKind, DEFAULT_HISTORY_WINDOW};
pub use packet::{Layer, Packet};
pub use payload::{DataPayload, Payload, RefreshPayload, RefreshVariant, DEFAULT_PAYLOAD_BUDGET};
pub use rgen::rgen_schedule;
pub use sink::{Delivery, Discard, SinkState, Unwrapped};

pub(crate) use packet::{peel, PeelFailure};

/// Sensor node identity. At most 2^16 nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u16);

impl NodeId {
    pub fn index(self) -> usize {
        usize::from(self.0)
    }

    pub fn to_be_bytes(self) -> [u8; 2] {
        self.0.to_be_bytes()
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.0)
    }
}

impl From<u16> for NodeId {
    fn from(v: u16) -> Self {
        NodeId(v)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("no key registered for node {0}")]
    UnknownNode(NodeId),
    #[error("layer of node {0} does not decrypt under the registered key")]
    DecryptFailed(NodeId),
    #[error("malformed packet: {0}")]
    Malformed(&'static str),
    #[error("refresh requested but no new key is pending")]
    NoPendingRefresh,
    #[error("re-encryption probability must lie in (0, 1), got {0}")]
    InvalidProbability(f64),
    #[error("rate must be finite and non-negative, got {0}")]
    InvalidRate(f64),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}
