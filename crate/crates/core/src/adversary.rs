//! The parasitic adversary: a mobile attacker that compromises the node in
//! its cell, keeps a snapshot of the stolen key, and passively decrypts
//! packets it overhears.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{CipherSuite, SymmetricKey};
use crate::protocol::payload::decode_record;
use crate::protocol::{peel, NodeId, NodeProtocolState, Packet, Payload, RefreshVariant};
use crate::sim::{GridTopology, DIRECTIONS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdversaryError {
    #[error("no stolen key for node {0}")]
    MissingKey(NodeId),
    #[error("stolen key for node {0} is out of date")]
    StaleKey(NodeId),
    #[error("innermost record does not parse")]
    Malformed,
    #[error("node {node} is not at the adversary's position {position}")]
    NotAtPosition { node: NodeId, position: NodeId },
    #[error("compromise at t={t} within {gap} of the previous one at t={last}")]
    TooSoon { t: f64, last: f64, gap: f64 },
}

/// How a mobile party picks the next cell it acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Targeting {
    /// A fresh cell drawn uniformly at every event.
    #[default]
    Uniform,
    /// One step of a symmetric random walk on the torus.
    Walk,
    /// A deterministic row-major sweep over all cells.
    Sweep,
}

impl Targeting {
    /// Moves `pos` according to the strategy.
    pub fn advance(self, topo: &GridTopology, pos: NodeId, rng: &mut dyn RngCore) -> NodeId {
        match self {
            Targeting::Uniform => topo.random_node(rng),
            Targeting::Walk => {
                let d = DIRECTIONS[rng.random_range(0..DIRECTIONS.len())];
                topo.node_at(topo.step(topo.cell(pos), d))
            }
            Targeting::Sweep => NodeId(((pos.index() + 1) % topo.node_count()) as u16),
        }
    }
}

impl fmt::Display for Targeting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Targeting::Uniform => "uniform",
            Targeting::Walk => "walk",
            Targeting::Sweep => "sweep",
        })
    }
}

impl FromStr for Targeting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Targeting::Uniform),
            "walk" => Ok(Targeting::Walk),
            "sweep" => Ok(Targeting::Sweep),
            other => Err(format!("unknown targeting `{other}` (expected uniform, walk or sweep)")),
        }
    }
}

/// One overheard packet and what the adversary made of it.
#[derive(Debug, Clone)]
pub struct InterceptRecord {
    pub time: f64,
    pub packet: Packet,
    pub outcome: Result<Payload, AdversaryError>,
}

#[derive(Debug, Clone)]
pub struct AdversaryState {
    position: NodeId,
    stolen: BTreeMap<NodeId, SymmetricKey>,
    harvested: Vec<(NodeId, Vec<u8>)>,
    intercept_log: Vec<InterceptRecord>,
    log_intercepts: bool,
    last_compromise: Option<f64>,
    min_gap: f64,
}

impl AdversaryState {
    pub fn new(position: NodeId) -> Self {
        Self {
            position,
            stolen: BTreeMap::new(),
            harvested: Vec::new(),
            intercept_log: Vec::new(),
            log_intercepts: true,
            last_compromise: None,
            min_gap: 0.0,
        }
    }

    /// Minimum simulated time between two compromises.
    pub fn with_min_gap(mut self, gap: f64) -> Self {
        self.min_gap = gap.max(0.0);
        self
    }

    /// Whether [`intercept`](Self::intercept) keeps a copy of each packet.
    pub fn with_intercept_log(mut self, on: bool) -> Self {
        self.log_intercepts = on;
        self
    }

    pub fn position(&self) -> NodeId {
        self.position
    }

    pub fn stolen(&self) -> &BTreeMap<NodeId, SymmetricKey> {
        &self.stolen
    }

    /// Measurements copied out of compromised nodes' memory.
    pub fn harvested(&self) -> &[(NodeId, Vec<u8>)] {
        &self.harvested
    }

    pub fn intercept_log(&self) -> &[InterceptRecord] {
        &self.intercept_log
    }

    pub fn move_to(&mut self, pos: NodeId) {
        self.position = pos;
    }

    /// One step of the random walk.
    pub fn step_walk(&mut self, topo: &GridTopology, rng: &mut dyn RngCore) -> NodeId {
        self.advance(topo, Targeting::Walk, rng)
    }

    pub fn advance(&mut self, topo: &GridTopology, strategy: Targeting, rng: &mut dyn RngCore) -> NodeId {
        self.position = strategy.advance(topo, self.position, rng);
        self.position
    }

    /// Copies the key and measurement history out of `node`, which must sit
    /// in the adversary's cell. Returns whether the node was correct before.
    pub fn compromise(&mut self, node: &NodeProtocolState, t: f64) -> Result<bool, AdversaryError> {
        if node.id() != self.position {
            return Err(AdversaryError::NotAtPosition {
                node: node.id(),
                position: self.position,
            });
        }
        if let Some(last) = self.last_compromise {
            if t - last < self.min_gap {
                return Err(AdversaryError::TooSoon {
                    t,
                    last,
                    gap: self.min_gap,
                });
            }
        }
        let was_correct = !self.holds_current(node);
        self.last_compromise = Some(t);
        self.stolen.insert(node.id(), node.key().clone());
        self.harvested.extend(node.history().map(|m| (node.id(), m.to_vec())));
        Ok(was_correct)
    }

    /// True if the stolen snapshot for `node` is its current key.
    pub fn holds_current(&self, node: &NodeProtocolState) -> bool {
        self.stolen.get(&node.id()) == Some(node.key())
    }

    /// Peels `p` with the stolen keys only. Succeeds iff every layer's key
    /// was stolen at its current version.
    pub fn attempt_decrypt(&self, suite: &dyn CipherSuite, p: &Packet) -> Result<Payload, AdversaryError> {
        use crate::protocol::PeelFailure as F;
        let peeled = peel(suite, p, |id| self.stolen.get(&id)).map_err(|f| match f {
            F::UnknownNode(id) => AdversaryError::MissingKey(id),
            F::DecryptFailed(id) => AdversaryError::StaleKey(id),
            F::Malformed(_) => AdversaryError::Malformed,
        })?;
        let origin = *peeled.encryptors.last().expect("at least one layer");
        decode_record(&peeled.record, origin, suite.mac_len()).map_err(|_| AdversaryError::Malformed)
    }

    /// Overhears `p`. A readable symmetric-variant refresh hands the adversary
    /// the node's next key as well.
    pub fn intercept(&mut self, suite: &dyn CipherSuite, p: &Packet, t: f64) -> Result<Payload, AdversaryError> {
        let outcome = self.attempt_decrypt(suite, p);
        if let Ok(Payload::Refresh(r)) = &outcome {
            if r.variant == RefreshVariant::Symmetric {
                let old_version = self.stolen[&r.origin].version();
                if let Ok(k) = SymmetricKey::from_slice(&r.key_material, old_version + 1) {
                    self.stolen.insert(r.origin, k);
                }
            }
        }
        if self.log_intercepts {
            self.intercept_log.push(InterceptRecord {
                time: t,
                packet: p.clone(),
                outcome: outcome.clone(),
            });
        }
        outcome
    }
}
