#![allow(dead_code)]

use std::path::PathBuf;

use gossicrypt::crypto::{CipherSuite, Nonce, SymmetricKey, ToySuite};
use gossicrypt::protocol::payload::RefreshVariant;
use gossicrypt::protocol::{Delivery, NodeId, NodeProtocolState, Packet, SinkState};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

/// `count` nodes with ids `0..count`, all registered at a fresh sink.
pub fn network(suite: &dyn CipherSuite, count: usize, rng: &mut dyn RngCore) -> (Vec<NodeProtocolState>, SinkState) {
    let mut sink = SinkState::new(suite.generate_keypair(rng));
    let nodes = (0..count as u16)
        .map(|i| {
            let key = SymmetricKey::generate(rng, 0);
            sink.register(NodeId(i), key.clone());
            NodeProtocolState::new(NodeId(i), key, 0.5).unwrap()
        })
        .collect();
    (nodes, sink)
}

/// Source `nodes[0]` encrypts `m`; relay `nodes[j]` re-encrypts iff bit
/// `j - 1` of `coins` is set.
pub fn route(
    suite: &dyn CipherSuite,
    nodes: &[NodeProtocolState],
    m: &[u8],
    coins: u32,
    rng: &mut dyn RngCore,
) -> Packet {
    let mut p = nodes[0].source_encrypt(suite, m, rng);
    for (j, relay) in nodes[1..].iter().enumerate() {
        p = relay.relay_with_coin(suite, p, coins >> j & 1 == 1);
    }
    p
}

#[derive(Deserialize)]
struct GoldenRelay {
    id: u16,
    key: String,
    coin: bool,
}

#[derive(Deserialize)]
struct GoldenCase {
    name: String,
    kind: String,
    origin: u16,
    origin_key: String,
    body: String,
    nonce: String,
    budget: usize,
    relays: Vec<GoldenRelay>,
    packet: String,
}

fn key(hex_str: &str) -> SymmetricKey {
    SymmetricKey::from_slice(&hex::decode(hex_str).unwrap(), 0).unwrap()
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Rebuilds every golden packet under the toy suite, compares the wire
/// bytes, and checks that a sink unwraps each one. Returns the case count.
pub fn check_golden_fixtures() -> Result<usize, String> {
    let suite = ToySuite;
    let text = std::fs::read_to_string(fixture_path("golden_packets.json")).map_err(|e| e.to_string())?;
    let cases: Vec<GoldenCase> = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    for c in &cases {
        let origin = NodeId(c.origin);
        let node = NodeProtocolState::new(origin, key(&c.origin_key), 0.5)
            .unwrap()
            .with_payload_budget(c.budget);
        let nonce = Nonce::new(hex::decode(&c.nonce).unwrap().try_into().unwrap());
        let body = hex::decode(&c.body).unwrap();
        let mut p = match c.kind.as_str() {
            "data" => node.seal_data(&suite, &body, nonce),
            "refresh_symmetric" => node.seal_refresh(&suite, RefreshVariant::Symmetric, &body, nonce),
            other => return Err(format!("{}: unknown kind {other}", c.name)),
        };
        let mut sink = SinkState::new(suite.generate_keypair(&mut ChaCha8Rng::seed_from_u64(0)));
        sink.register(origin, key(&c.origin_key));
        for r in &c.relays {
            let relay = NodeProtocolState::new(NodeId(r.id), key(&r.key), 0.5).unwrap();
            sink.register(NodeId(r.id), key(&r.key));
            p = relay.relay_with_coin(&suite, p, r.coin);
        }
        let got = hex::encode(p.to_bytes());
        if got != c.packet {
            return Err(format!("{}: bytes differ\n  want {}\n  got  {got}", c.name, c.packet));
        }
        let parsed = Packet::from_bytes(&hex::decode(&c.packet).unwrap()).map_err(|e| format!("{}: {e}", c.name))?;
        match (c.kind.as_str(), sink.receive(&suite, &parsed)) {
            ("data", Ok(Delivery::Measurement { m, .. })) if m == body => {}
            ("refresh_symmetric", Ok(Delivery::KeyInstalled { version: 1, .. }))
                if sink.key_for(origin).unwrap().bytes().as_slice() == body.as_slice() => {}
            (_, other) => return Err(format!("{}: sink outcome {other:?}", c.name)),
        }
    }
    Ok(cases.len())
}
