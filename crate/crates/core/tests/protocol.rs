mod common;

use std::collections::HashSet;

use gossicrypt::adversary::AdversaryState;
use gossicrypt::crypto::{CipherSuite, Nonce, StandardSuite, SymmetricKey, ToySuite};
use gossicrypt::protocol::payload::RefreshVariant;
use gossicrypt::protocol::{Delivery, Discard, NodeId, Payload, ProtocolError, ReportKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn every_coin_pattern_round_trips_under_both_suites() {
    let suites: [&dyn CipherSuite; 2] = [&ToySuite, &StandardSuite];
    for suite in suites {
        let mut r = rng(1);
        for l in 0..=8usize {
            let (nodes, mut sink) = common::network(suite, l + 1, &mut r);
            for coins in 0u32..(1 << l) {
                let m = format!("reading {l}/{coins}");
                let p = common::route(suite, &nodes, m.as_bytes(), coins, &mut r);
                assert_eq!(u32::from(p.layer_count()), 1 + coins.count_ones());
                let d = sink.receive(suite, &p).unwrap();
                assert_eq!(
                    d,
                    Delivery::Measurement {
                        origin: NodeId(0),
                        m: m.into_bytes()
                    }
                );
            }
        }
    }
}

#[test]
fn outer_id_names_the_last_re_encryptor() {
    let suite = ToySuite;
    let mut r = rng(2);
    let (nodes, sink) = common::network(&suite, 10, &mut r);
    let p = common::route(&suite, &nodes, b"m", 0b0_0100_1001, &mut r);
    assert_eq!(p.outer_id(), NodeId(7));
    let u = sink.unwrap(&suite, &p).unwrap();
    assert_eq!(u.encryptors, vec![NodeId(7), NodeId(4), NodeId(1), NodeId(0)]);
}

#[test]
fn forced_coins_at_the_boundaries() {
    let suite = ToySuite;
    let mut r = rng(3);
    let (nodes, _) = common::network(&suite, 2, &mut r);
    let p = nodes[0].source_encrypt(&suite, b"m", &mut r);
    assert_eq!(nodes[1].relay_with_coin(&suite, p.clone(), false), p);
    let wrapped = nodes[1].relay_with_coin(&suite, p.clone(), true);
    assert_eq!(wrapped.layer_count(), 2);
    assert_eq!(wrapped.outer_id(), NodeId(1));
}

#[test]
fn re_encryption_frequency_matches_q() {
    let suite = ToySuite;
    let mut r = rng(4);
    let key = SymmetricKey::generate(&mut r, 0);
    let relay = gossicrypt::protocol::NodeProtocolState::new(NodeId(1), key, 0.7).unwrap();
    let trials = 100_000;
    let heads = (0..trials).filter(|_| relay.coin(&mut r)).count() as f64;
    let sigma = (trials as f64 * 0.7 * 0.3).sqrt();
    assert!((heads - 0.7 * trials as f64).abs() < 3.0 * sigma, "{heads}");

    // And through relay_process itself on a smaller sample.
    let (nodes, _) = common::network(&suite, 1, &mut r);
    let p = nodes[0].source_encrypt(&suite, b"m", &mut r);
    let n = 5_000;
    let grown = (0..n)
        .filter(|_| relay.relay_process(&suite, p.clone(), &mut r).layer_count() == 2)
        .count() as f64;
    let sigma = (n as f64 * 0.21).sqrt();
    assert!((grown - 0.7 * n as f64).abs() < 3.0 * sigma);
}

#[test]
fn same_measurement_twice_gives_fresh_nonce_and_ciphertext() {
    let suite = StandardSuite;
    let mut r = rng(5);
    let (nodes, sink) = common::network(&suite, 1, &mut r);
    let a = nodes[0].source_encrypt(&suite, b"t=21.5", &mut r);
    let b = nodes[0].source_encrypt(&suite, b"t=21.5", &mut r);
    assert_ne!(a.to_bytes(), b.to_bytes());
    let (ua, ub) = (sink.unwrap(&suite, &a).unwrap(), sink.unwrap(&suite, &b).unwrap());
    assert_ne!(ua.payload.nonce(), ub.payload.nonce());
}

#[test]
fn stale_layer_key_fails_to_decrypt() {
    let suite = ToySuite;
    let mut r = rng(6);
    let (mut nodes, mut sink) = common::network(&suite, 3, &mut r);
    let before = common::route(&suite, &nodes, b"old", 0b11, &mut r);
    // Relay 1 refreshes; the sink learns the new key.
    nodes[1].schedule_refresh(&mut r);
    let (refresh, k) = nodes[1].refresh_build(&suite, None, &mut r).unwrap();
    nodes[1].install_key(k);
    assert!(matches!(
        sink.receive(&suite, &refresh),
        Ok(Delivery::KeyInstalled { version: 1, .. })
    ));
    assert_eq!(
        sink.receive(&suite, &before),
        Err(ProtocolError::DecryptFailed(NodeId(1)))
    );
    let after = common::route(&suite, &nodes, b"new", 0b11, &mut r);
    assert!(matches!(sink.receive(&suite, &after), Ok(Delivery::Measurement { .. })));
}

#[test]
fn unknown_encryptor_is_reported() {
    let suite = ToySuite;
    let mut r = rng(7);
    let (nodes, _) = common::network(&suite, 2, &mut r);
    let (_, other_sink) = common::network(&suite, 1, &mut r);
    let p = common::route(&suite, &nodes, b"m", 0b1, &mut r);
    assert_eq!(
        other_sink.unwrap(&suite, &p).unwrap_err(),
        ProtocolError::UnknownNode(NodeId(1))
    );
}

#[test]
fn tampered_measurement_fails_the_mac() {
    let suite = ToySuite;
    let mut r = rng(8);
    let (nodes, mut sink) = common::network(&suite, 1, &mut r);
    let p = nodes[0].source_encrypt(&suite, b"t=21.5", &mut r);
    let Payload::Data(mut d) = sink.unwrap(&suite, &p).unwrap().payload else {
        panic!("expected data");
    };
    d.m[0] ^= 1;
    assert_eq!(sink.verify_data(&suite, &d), Err(Discard::BadMac));
    // A rejected payload does not consume the nonce.
    d.m[0] ^= 1;
    assert_eq!(sink.verify_data(&suite, &d), Ok(b"t=21.5".to_vec()));
    assert_eq!(sink.verify_data(&suite, &d), Err(Discard::Replay));
}

#[test]
fn refresh_and_data_packets_have_equal_length() {
    let suites: [&dyn CipherSuite; 2] = [&ToySuite, &StandardSuite];
    for suite in suites {
        let mut r = rng(9);
        let (mut nodes, sink) = common::network(suite, 4, &mut r);
        let data = common::route(suite, &nodes, &[7u8; 20], 0b101, &mut r);
        for pk in [None, Some(sink.public_key())] {
            nodes[0].schedule_refresh(&mut r);
            let (p, _) = nodes[0].refresh_build(suite, pk, &mut r).unwrap();
            let mut refresh = p;
            for (j, relay) in nodes[1..].iter().enumerate() {
                refresh = relay.relay_with_coin(suite, refresh, 0b101 >> j & 1 == 1);
            }
            assert_eq!(
                refresh.to_bytes().len(),
                data.to_bytes().len(),
                "{} {pk:?}",
                suite.name()
            );
        }
    }
}

#[test]
fn wrapped_refresh_resists_an_old_key_interceptor() {
    let suite = StandardSuite;
    let mut r = rng(10);
    let (mut nodes, mut sink) = common::network(&suite, 2, &mut r);
    let mut adv = AdversaryState::new(NodeId(0));
    adv.compromise(&nodes[0], 0.0).unwrap();
    adv.move_to(NodeId(1));
    adv.compromise(&nodes[1], 1.0).unwrap();

    nodes[0].schedule_refresh(&mut r);
    let (p, k) = nodes[0].refresh_build(&suite, Some(sink.public_key()), &mut r).unwrap();
    let p = nodes[1].relay_with_coin(&suite, p, true);
    let Ok(Payload::Refresh(seen)) = adv.intercept(&suite, &p, 2.0) else {
        panic!("the adversary holds both layer keys");
    };
    assert_eq!(seen.variant, RefreshVariant::Wrapped);
    assert!(!seen.key_material.windows(16).any(|w| w == k.bytes()));
    nodes[0].install_key(k);
    assert!(!adv.holds_current(&nodes[0]));
    assert!(matches!(sink.receive(&suite, &p), Ok(Delivery::KeyInstalled { .. })));
    let next = nodes[0].source_encrypt(&suite, b"secret", &mut r);
    assert!(adv.attempt_decrypt(&suite, &next).is_err());
    assert!(matches!(sink.receive(&suite, &next), Ok(Delivery::Measurement { .. })));
}

#[test]
fn symmetric_refresh_is_readable_by_an_old_key_interceptor() {
    let suite = StandardSuite;
    let mut r = rng(11);
    let (mut nodes, mut sink) = common::network(&suite, 1, &mut r);
    let mut adv = AdversaryState::new(NodeId(0));
    adv.compromise(&nodes[0], 0.0).unwrap();
    nodes[0].schedule_refresh(&mut r);
    let (p, k) = nodes[0].refresh_build(&suite, None, &mut r).unwrap();
    nodes[0].install_key(k);
    adv.intercept(&suite, &p, 1.0).unwrap();
    assert!(adv.holds_current(&nodes[0]));
    assert!(matches!(sink.receive(&suite, &p), Ok(Delivery::KeyInstalled { .. })));
}

#[test]
fn wrapped_key_naming_another_node_is_rejected() {
    let suite = StandardSuite;
    let mut r = rng(12);
    let (nodes, mut sink) = common::network(&suite, 3, &mut r);
    let forged_key = SymmetricKey::generate(&mut r, 1);
    let mut plain = NodeId(2).to_be_bytes().to_vec();
    plain.extend(forged_key.bytes());
    let km = suite.pke_encrypt(sink.public_key(), &plain, &mut r).unwrap();
    let p = nodes[1].seal_refresh(&suite, RefreshVariant::Wrapped, &km, Nonce::random(&mut r));
    let before = sink.key_for(NodeId(1)).unwrap().clone();
    assert_eq!(
        sink.receive(&suite, &p).unwrap(),
        Delivery::Discarded {
            origin: NodeId(1),
            reason: Discard::IdMismatch
        }
    );
    assert_eq!(sink.key_for(NodeId(1)), Some(&before));
}

#[test]
fn replayed_refresh_leaves_the_key_alone() {
    let suite = ToySuite;
    let mut r = rng(13);
    let (mut nodes, mut sink) = common::network(&suite, 1, &mut r);
    nodes[0].schedule_refresh(&mut r);
    let (p, k) = nodes[0].refresh_build(&suite, Some(sink.public_key()), &mut r).unwrap();
    nodes[0].install_key(k.clone());
    // Replicas reuse the nonce; the first copy installs, the others replay.
    assert!(matches!(
        sink.receive(&suite, &p),
        Ok(Delivery::KeyInstalled { version: 1, .. })
    ));
    for _ in 0..3 {
        // Later copies are under the now-replaced key.
        assert!(sink.receive(&suite, &p).is_err());
    }
    assert_eq!(sink.key_for(NodeId(0)), Some(&k));
}

#[test]
fn refresh_replica_under_the_same_key_is_a_replay() {
    let suite = ToySuite;
    let mut r = rng(14);
    let (mut nodes, mut sink) = common::network(&suite, 1, &mut r);
    nodes[0].schedule_refresh(&mut r);
    let (p, k) = nodes[0].refresh_build(&suite, None, &mut r).unwrap();
    let Payload::Refresh(rp) = sink.unwrap(&suite, &p).unwrap().payload else {
        panic!("expected refresh");
    };
    assert_eq!(sink.process_refresh(&suite, &rp), Ok(k.clone()));
    let mut replay = rp.clone();
    replay.mac = suite.mac(&k, &[]);
    assert!(matches!(
        sink.process_refresh(&suite, &replay),
        Err(Discard::Replay | Discard::BadMac)
    ));
    assert_eq!(sink.key_for(NodeId(0)).unwrap().version(), 1);
}

#[test]
fn delayed_measurement_rides_with_the_next_report() {
    let suite = ToySuite;
    let mut r = rng(15);
    let (mut nodes, mut sink) = common::network(&suite, 1, &mut r);
    nodes[0].schedule_refresh(&mut r);
    let first = nodes[0]
        .next_report(&suite, b"AAAA", Some(sink.public_key()), &mut r)
        .unwrap();
    assert!(matches!(first.kind, ReportKind::Refresh { .. }));
    assert!(matches!(
        sink.receive(&suite, &first.packet),
        Ok(Delivery::KeyInstalled { .. })
    ));
    let second = nodes[0].next_report(&suite, b"BBBB", None, &mut r).unwrap();
    assert_eq!(second.kind, ReportKind::Data);
    assert_eq!(
        sink.receive(&suite, &second.packet).unwrap(),
        Delivery::Measurement {
            origin: NodeId(0),
            m: b"AAAABBBB".to_vec()
        }
    );
    let third = nodes[0].next_report(&suite, b"CCCC", None, &mut r).unwrap();
    assert!(matches!(sink.receive(&suite, &third.packet), Ok(Delivery::Measurement { m, .. }) if m == b"CCCC"));
}

#[test]
fn golden_packets_match_the_reference_encoder() {
    assert_eq!(common::check_golden_fixtures(), Ok(5));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_for_any_message_and_coins(
        seed in any::<u64>(),
        m in proptest::collection::vec(any::<u8>(), 0..200),
        l in 0usize..=8,
        coins in any::<u32>(),
    ) {
        let suite = ToySuite;
        let mut r = rng(seed);
        let (nodes, mut sink) = common::network(&suite, l + 1, &mut r);
        let coins = coins & ((1 << l) - 1);
        let mut p = nodes[0].source_encrypt(&suite, &m, &mut r);
        let mut count = p.layer_count();
        for (j, relay) in nodes[1..].iter().enumerate() {
            p = relay.relay_with_coin(&suite, p, coins >> j & 1 == 1);
            prop_assert!(p.layer_count() >= count);
            count = p.layer_count();
        }
        prop_assert_eq!(u32::from(count), 1 + coins.count_ones());
        let bytes = p.to_bytes();
        let parsed = gossicrypt::protocol::Packet::from_bytes(&bytes).unwrap();
        prop_assert_eq!(sink.receive(&suite, &parsed).unwrap(), Delivery::Measurement { origin: NodeId(0), m });
    }

    #[test]
    fn each_nonce_is_accepted_at_most_once(
        seed in any::<u64>(),
        order in proptest::collection::vec(0usize..6, 1..40),
    ) {
        let suite = ToySuite;
        let mut r = rng(seed);
        let (nodes, mut sink) = common::network(&suite, 3, &mut r);
        let packets: Vec<_> = (0..6u32)
            .map(|i| common::route(&suite, &nodes, &i.to_be_bytes(), i % 4, &mut r))
            .collect();
        let mut accepted = HashSet::new();
        for &i in &order {
            match sink.receive(&suite, &packets[i]).unwrap() {
                Delivery::Measurement { .. } => prop_assert!(accepted.insert(i), "packet {} accepted twice", i),
                Delivery::Discarded { reason, .. } => {
                    prop_assert_eq!(reason, Discard::Replay);
                    prop_assert!(accepted.contains(&i));
                }
                other => prop_assert!(false, "unexpected {:?}", other),
            }
        }
        let distinct: HashSet<_> = order.iter().copied().collect();
        prop_assert_eq!(accepted, distinct);
    }

    #[test]
    fn adversary_reads_iff_it_holds_every_layer_key(
        seed in any::<u64>(),
        l in 0usize..=6,
        coins in any::<u32>(),
        stolen in any::<u32>(),
    ) {
        let suite = ToySuite;
        let mut r = rng(seed);
        let (nodes, _) = common::network(&suite, l + 1, &mut r);
        let coins = coins & ((1 << l) - 1);
        let p = common::route(&suite, &nodes, b"m", coins, &mut r);
        let mut layers: HashSet<usize> = HashSet::from([0]);
        layers.extend((0..l).filter(|j| coins >> j & 1 == 1).map(|j| j + 1));
        let mut adv = AdversaryState::new(NodeId(0));
        let mut held = HashSet::new();
        for (i, n) in nodes.iter().enumerate() {
            if stolen >> i & 1 == 1 {
                adv.move_to(n.id());
                adv.compromise(n, i as f64).unwrap();
                held.insert(i);
            }
        }
        prop_assert_eq!(adv.attempt_decrypt(&suite, &p).is_ok(), layers.is_subset(&held));
    }

    #[test]
    fn accepted_refresh_switches_keys_atomically(seed in any::<u64>(), wrapped in any::<bool>()) {
        let suite = ToySuite;
        let mut r = rng(seed);
        let (mut nodes, mut sink) = common::network(&suite, 2, &mut r);
        let old = common::route(&suite, &nodes, b"old", 1, &mut r);
        nodes[0].schedule_refresh(&mut r);
        let pk = sink.public_key().clone();
        let (p, k) = nodes[0].refresh_build(&suite, wrapped.then_some(&pk), &mut r).unwrap();
        nodes[0].install_key(k);
        prop_assert!(matches!(sink.receive(&suite, &p), Ok(Delivery::KeyInstalled { version: 1, .. })), "refresh not accepted");
        prop_assert_eq!(sink.receive(&suite, &old), Err(ProtocolError::DecryptFailed(NodeId(0))));
        let new = common::route(&suite, &nodes, b"new", 1, &mut r);
        prop_assert!(matches!(sink.receive(&suite, &new), Ok(Delivery::Measurement { .. })), "new-key packet rejected");
    }
}
