//! Innermost payload records and their MAC inputs.
//!
//! Record layout before encryption:
//!
//! ```text
//! kind:u8 body_len:u16 body zero_padding nonce:[u8; 8] mac
//! ```
//!
//! `body || zero_padding` is rounded up to a multiple of the payload budget,
//! so data and refresh records of similar size are indistinguishable on the
//! wire. `kind` doubles as the refresh flag: `0x00` data, `0x01` refresh
//! carrying a raw key, `0x02` refresh carrying a key wrapped to the sink.

use serde::{Deserialize, Serialize};

use super::{NodeId, ProtocolError};
use crate::crypto::{MacTag, Nonce, NONCE_LEN};

/// Default padding quantum for payload bodies, in bytes.
pub const DEFAULT_PAYLOAD_BUDGET: usize = 96;

pub(crate) const KIND_DATA: u8 = 0x00;
pub(crate) const KIND_REFRESH_RAW: u8 = 0x01;
pub(crate) const KIND_REFRESH_WRAPPED: u8 = 0x02;

/// Which key-refresh variant a refresh message uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefreshVariant {
    /// The new key travels under the node's current symmetric key only.
    Symmetric,
    /// The new key and node id are additionally encrypted to the sink's
    /// public key.
    #[default]
    Wrapped,
}

impl RefreshVariant {
    pub(crate) fn flag(self) -> u8 {
        match self {
            RefreshVariant::Symmetric => KIND_REFRESH_RAW,
            RefreshVariant::Wrapped => KIND_REFRESH_WRAPPED,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            RefreshVariant::Symmetric => 1,
            RefreshVariant::Wrapped => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(RefreshVariant::Symmetric),
            2 => Some(RefreshVariant::Wrapped),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataPayload {
    pub m: Vec<u8>,
    pub nonce: Nonce,
    pub mac: MacTag,
    pub origin: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefreshPayload {
    pub variant: RefreshVariant,
    /// Raw new key (symmetric variant) or the sink-wrapped `id || key`.
    pub key_material: Vec<u8>,
    pub nonce: Nonce,
    pub mac: MacTag,
    pub origin: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Data(DataPayload),
    Refresh(RefreshPayload),
}

impl Payload {
    pub fn origin(&self) -> NodeId {
        match self {
            Payload::Data(d) => d.origin,
            Payload::Refresh(r) => r.origin,
        }
    }

    pub fn nonce(&self) -> Nonce {
        match self {
            Payload::Data(d) => d.nonce,
            Payload::Refresh(r) => r.nonce,
        }
    }
}

fn push_field(out: &mut Vec<u8>, field: &[u8]) {
    let len = u16::try_from(field.len()).expect("MAC fields are shorter than 64 KiB");
    out.extend(len.to_be_bytes());
    out.extend(field);
}

/// MAC input for a data report: `m || n || S_i`, each length-prefixed.
pub fn data_mac_input(m: &[u8], nonce: &Nonce, origin: NodeId) -> Vec<u8> {
    let mut out = Vec::with_capacity(m.len() + 16);
    push_field(&mut out, m);
    push_field(&mut out, nonce.as_bytes());
    push_field(&mut out, &origin.to_be_bytes());
    out
}

/// MAC input for a refresh: `flag || key_material || n || S_i`, each
/// length-prefixed.
pub fn refresh_mac_input(variant: RefreshVariant, key_material: &[u8], nonce: &Nonce, origin: NodeId) -> Vec<u8> {
    let mut out = Vec::with_capacity(key_material.len() + 20);
    push_field(&mut out, &[variant.flag()]);
    push_field(&mut out, key_material);
    push_field(&mut out, nonce.as_bytes());
    push_field(&mut out, &origin.to_be_bytes());
    out
}

pub(crate) fn padded_len(body_len: usize, budget: usize) -> usize {
    let budget = budget.max(1);
    body_len.div_ceil(budget).max(1) * budget
}

pub(crate) fn encode_record(kind: u8, body: &[u8], nonce: &Nonce, mac: &MacTag, budget: usize) -> Vec<u8> {
    let body_len = u16::try_from(body.len()).expect("payload body shorter than 64 KiB");
    let padded = padded_len(body.len(), budget);
    let mut out = Vec::with_capacity(3 + padded + NONCE_LEN + mac.as_bytes().len());
    out.push(kind);
    out.extend(body_len.to_be_bytes());
    out.extend(body);
    out.resize(3 + padded, 0);
    out.extend(nonce.as_bytes());
    out.extend(mac.as_bytes());
    out
}

pub(crate) fn decode_record(bytes: &[u8], origin: NodeId, mac_len: usize) -> Result<Payload, ProtocolError> {
    let fixed = 3 + NONCE_LEN + mac_len;
    if bytes.len() < fixed {
        return Err(ProtocolError::Malformed("payload record too short"));
    }
    let kind = bytes[0];
    let body_len = usize::from(u16::from_be_bytes([bytes[1], bytes[2]]));
    let padded = bytes.len() - fixed;
    if body_len > padded {
        return Err(ProtocolError::Malformed("payload body length exceeds record"));
    }
    let body = &bytes[3..3 + body_len];
    if bytes[3 + body_len..3 + padded].iter().any(|&b| b != 0) {
        return Err(ProtocolError::Malformed("non-zero payload padding"));
    }
    let nonce_start = 3 + padded;
    let nonce = Nonce::new(
        bytes[nonce_start..nonce_start + NONCE_LEN]
            .try_into()
            .expect("slice has nonce length"),
    );
    let mac = MacTag::new(bytes[nonce_start + NONCE_LEN..].to_vec());
    match kind {
        KIND_DATA => Ok(Payload::Data(DataPayload {
            m: body.to_vec(),
            nonce,
            mac,
            origin,
        })),
        KIND_REFRESH_RAW | KIND_REFRESH_WRAPPED => Ok(Payload::Refresh(RefreshPayload {
            variant: if kind == KIND_REFRESH_RAW {
                RefreshVariant::Symmetric
            } else {
                RefreshVariant::Wrapped
            },
            key_material: body.to_vec(),
            nonce,
            mac,
            origin,
        })),
        _ => Err(ProtocolError::Malformed("unknown payload kind")),
    }
}
