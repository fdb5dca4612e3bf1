use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ConfigError, GridTopology, SimConfig};
use crate::adversary::AdversaryState;
use crate::crypto::{CipherSuite, SymmetricKey};
use crate::protocol::{
    Delivery, NodeId, NodeProtocolState, Packet, Payload, ProtocolError, RefreshVariant, ReportKind, SinkState,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Refresh,
    Compromise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub time: f64,
    pub kind: EventKind,
    pub target: NodeId,
    /// Correct nodes after the event.
    pub correct: usize,
}

/// Counters and the post-burn-in histogram of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub seed: u64,
    pub transitions: u64,
    pub burn_in: u64,
    /// `state_histogram[i]`: post-burn-in events after which exactly `i`
    /// nodes were correct.
    pub state_histogram: Vec<u64>,
    pub sink_events: u64,
    pub adversary_events: u64,
    pub compromises_skipped: u64,
    pub final_correct: usize,
    pub sim_time: f64,
    pub refreshes_sent: u64,
    pub refreshes_installed: u64,
    pub refreshes_lost: u64,
    pub key_leaks: u64,
    pub data_sent: u64,
    pub data_delivered: u64,
    pub data_discarded: u64,
    pub data_breached: u64,
    pub packets_received: u64,
    pub decrypt_failures: u64,
    pub decrypt_fail_rate: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub trace: Vec<TraceEntry>,
}

impl SimMetrics {
    pub fn histogram_mass(&self) -> u64 {
        self.state_histogram.iter().sum()
    }

    pub fn empirical_distribution(&self) -> Vec<f64> {
        crate::stats::normalize(&self.state_histogram)
    }
}

/// Derives the seed of sub-experiment `index` from a master seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1 << 32));
    rng.next_u64()
}

const STREAM_EVENTS: u64 = 0;
const STREAM_PROTOCOL: u64 = 1;
const STREAM_MEASURE: u64 = 2;

/// Outcome of pushing one packet from a source to the sink's cell.
#[derive(Debug, Clone)]
pub struct Transit {
    pub packet: Packet,
    /// The adversary read the packet somewhere along the way.
    pub breached: bool,
}

/// The full system: nodes, sink, adversary and the event clock.
pub struct Simulation {
    cfg: SimConfig,
    topo: GridTopology,
    suite: Box<dyn CipherSuite>,
    nodes: Vec<NodeProtocolState>,
    sink: SinkState,
    adversary: AdversaryState,
    sink_pos: NodeId,
    correct: usize,
    time: f64,
    events: u64,
    epoch: u64,
    gaps: Exp<f64>,
    event_rng: ChaCha8Rng,
    proto_rng: ChaCha8Rng,
    measure_rng: ChaCha8Rng,
    metrics: SimMetrics,
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let topo = GridTopology::new(cfg.n).map_err(|e| ConfigError::new("n", e.to_string()))?;
        let suite = cfg.suite.build();
        let stream = |s: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(s);
            rng
        };
        let mut event_rng = stream(STREAM_EVENTS);
        let mut proto_rng = stream(STREAM_PROTOCOL);
        let measure_rng = stream(STREAM_MEASURE);

        let mut sink = SinkState::new(suite.generate_keypair(&mut proto_rng));
        let mut nodes = Vec::with_capacity(cfg.n);
        for id in topo.nodes() {
            let key = SymmetricKey::generate(&mut proto_rng, 0);
            sink.register(id, key.clone());
            nodes.push(
                NodeProtocolState::new(id, key, cfg.q)?
                    .with_payload_budget(cfg.payload_budget)
                    .with_history_window(cfg.history_window),
            );
        }
        let adversary = AdversaryState::new(topo.random_node(&mut event_rng))
            .with_min_gap(cfg.min_gap)
            .with_intercept_log(cfg.record_trace);
        let sink_pos = topo.random_node(&mut event_rng);
        let rate = cfg.effective_lambda() + 1.0 / cfg.tau;
        let metrics = SimMetrics {
            seed: cfg.seed,
            transitions: cfg.transitions,
            burn_in: cfg.burn_in,
            state_histogram: vec![0; cfg.n + 1],
            sink_events: 0,
            adversary_events: 0,
            compromises_skipped: 0,
            final_correct: cfg.n,
            sim_time: 0.0,
            refreshes_sent: 0,
            refreshes_installed: 0,
            refreshes_lost: 0,
            key_leaks: 0,
            data_sent: 0,
            data_delivered: 0,
            data_discarded: 0,
            data_breached: 0,
            packets_received: 0,
            decrypt_failures: 0,
            decrypt_fail_rate: 0.0,
            trace: Vec::new(),
        };
        Ok(Self {
            correct: cfg.n,
            topo,
            suite,
            nodes,
            sink,
            adversary,
            sink_pos,
            time: 0.0,
            events: 0,
            epoch: 0,
            gaps: Exp::new(rate).expect("rate validated"),
            event_rng,
            proto_rng,
            measure_rng,
            metrics,
            cfg,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn topology(&self) -> &GridTopology {
        &self.topo
    }

    pub fn suite(&self) -> &dyn CipherSuite {
        self.suite.as_ref()
    }

    pub fn nodes(&self) -> &[NodeProtocolState] {
        &self.nodes
    }

    pub fn sink(&self) -> &SinkState {
        &self.sink
    }

    pub fn adversary(&self) -> &AdversaryState {
        &self.adversary
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    /// Nodes whose current key the adversary does not hold.
    pub fn correct_count(&self) -> usize {
        self.correct
    }

    pub fn is_correct(&self, id: NodeId) -> bool {
        !self.adversary.holds_current(&self.nodes[id.index()])
    }

    /// The RNG reserved for measurement drivers, separate from the event and
    /// protocol streams.
    pub fn measure_rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.measure_rng
    }

    /// Advances the clock by one event and applies it.
    pub fn step(&mut self) -> TraceEntry {
        self.time += self.gaps.sample(&mut self.event_rng);
        let lambda = self.cfg.effective_lambda();
        let is_refresh = self.event_rng.random::<f64>() * (lambda + 1.0 / self.cfg.tau) < lambda;
        let entry = if is_refresh {
            self.sink_pos = self
                .cfg
                .sink_targeting
                .advance(&self.topo, self.sink_pos, &mut self.event_rng);
            let target = self.sink_pos;
            self.metrics.sink_events += 1;
            self.refresh(target);
            TraceEntry {
                time: self.time,
                kind: EventKind::Refresh,
                target,
                correct: self.correct,
            }
        } else {
            let target = self
                .adversary
                .advance(&self.topo, self.cfg.adversary_targeting, &mut self.event_rng);
            self.metrics.adversary_events += 1;
            match self.adversary.compromise(&self.nodes[target.index()], self.time) {
                Ok(true) => self.correct -= 1,
                Ok(false) => {}
                Err(_) => self.metrics.compromises_skipped += 1,
            }
            TraceEntry {
                time: self.time,
                kind: EventKind::Compromise,
                target,
                correct: self.correct,
            }
        };
        self.events += 1;
        if self.events > self.cfg.burn_in {
            self.metrics.state_histogram[self.correct] += 1;
        }
        if self.cfg.record_trace {
            self.metrics.trace.push(entry);
        }
        if self.cfg.report_every > 0 && self.events.is_multiple_of(self.cfg.report_every) {
            self.collect_reports();
        }
        entry
    }

    pub fn run_events(&mut self, count: u64) {
        for _ in 0..count {
            self.step();
        }
    }

    /// Runs until `cfg.transitions` events have happened in total.
    pub fn run_to_end(&mut self) {
        let remaining = self.cfg.transitions.saturating_sub(self.events);
        self.run_events(remaining);
    }

    fn measurement(&self, id: NodeId) -> Vec<u8> {
        let m = format!("S{:05}e{:013}", id.0, self.epoch % 10u64.pow(13));
        debug_assert_eq!(m.len(), 20);
        m.into_bytes()
    }

    /// Refreshes `target` through the full protocol path.
    fn refresh(&mut self, target: NodeId) {
        let was_correct = self.is_correct(target);
        let m = self.measurement(target);
        let sink_pub = match self.cfg.variant {
            RefreshVariant::Symmetric => None,
            RefreshVariant::Wrapped => Some(self.sink.public_key().clone()),
        };
        let node = &mut self.nodes[target.index()];
        node.schedule_refresh(&mut self.proto_rng);
        let report = node
            .next_report(self.suite.as_ref(), &m, sink_pub.as_ref(), &mut self.proto_rng)
            .expect("refresh was just scheduled");
        debug_assert!(matches!(report.kind, ReportKind::Refresh { .. }));
        self.metrics.refreshes_sent += 1;

        let path = self
            .topo
            .shortest_path(target, NodeId(self.cfg.sink_node), &mut self.proto_rng);
        let mut installed = false;
        for _ in 0..self.cfg.r {
            if self.proto_rng.random::<f64>() < self.cfg.refresh_loss {
                continue;
            }
            let leaked_before = self.adversary.holds_current(&self.nodes[target.index()]);
            let transit = self.transit(report.packet.clone(), &path);
            if !leaked_before && self.adversary.holds_current(&self.nodes[target.index()]) {
                self.metrics.key_leaks += 1;
            }
            installed |= matches!(self.deliver(&transit.packet), Some(Delivery::KeyInstalled { .. }));
        }
        if installed {
            self.metrics.refreshes_installed += 1;
        } else {
            self.metrics.refreshes_lost += 1;
        }
        let now_correct = self.is_correct(target);
        match (was_correct, now_correct) {
            (false, true) => self.correct += 1,
            (true, false) => self.correct -= 1,
            _ => {}
        }
    }

    /// Carries `packet` from `path[0]` along `path`. Interior nodes relay
    /// with their coin; the last cell hosts the sink. The adversary overhears
    /// the packet at every hop within its intercept radius.
    pub fn transit(&mut self, mut packet: Packet, path: &[NodeId]) -> Transit {
        let mut breached = false;
        let last = path.len().saturating_sub(1);
        for (j, &hop) in path.iter().enumerate() {
            if j > 0 && j < last {
                packet = self.nodes[hop.index()].relay_process(self.suite.as_ref(), packet, &mut self.proto_rng);
            }
            if self.topo.distance(hop, self.adversary.position()) <= self.cfg.intercept_radius {
                breached |= self
                    .adversary
                    .intercept(self.suite.as_ref(), &packet, self.time)
                    .is_ok();
            }
        }
        Transit { packet, breached }
    }

    fn deliver(&mut self, packet: &Packet) -> Option<Delivery> {
        self.metrics.packets_received += 1;
        match self.sink.receive(self.suite.as_ref(), packet) {
            Ok(d) => Some(d),
            Err(ProtocolError::DecryptFailed(_)) => {
                self.metrics.decrypt_failures += 1;
                None
            }
            Err(_) => None,
        }
    }

    /// One data-collection epoch: every reporting node sends one measurement
    /// to the sink.
    pub fn collect_reports(&mut self) {
        self.epoch += 1;
        for i in 0..self.cfg.reporting_nodes() {
            let id = NodeId(i as u16);
            let m = self.measurement(id);
            let report = self.nodes[i]
                .next_report(self.suite.as_ref(), &m, None, &mut self.proto_rng)
                .expect("no refresh pending outside sink events");
            let path = self
                .topo
                .shortest_path(id, NodeId(self.cfg.sink_node), &mut self.proto_rng);
            let transit = self.transit(report.packet, &path);
            self.metrics.data_sent += 1;
            if transit.breached {
                self.metrics.data_breached += 1;
            }
            match self.deliver(&transit.packet) {
                Some(Delivery::Measurement { .. }) => self.metrics.data_delivered += 1,
                _ => self.metrics.data_discarded += 1,
            }
        }
    }

    /// Sends one fresh measurement from `path[0]` along `path` and reports
    /// whether the adversary can read the packet as it arrives at the end.
    /// Node and sink state are untouched apart from the nonce stream.
    pub fn snapshot_breached(&mut self, path: &[NodeId]) -> bool {
        let source = path[0];
        let m = self.measurement(source);
        let mut packet = self.nodes[source.index()].source_encrypt(self.suite.as_ref(), &m, &mut self.measure_rng);
        let last = path.len() - 1;
        for &hop in &path[1..last] {
            packet = self.nodes[hop.index()].relay_process(self.suite.as_ref(), packet, &mut self.measure_rng);
        }
        matches!(
            self.adversary.attempt_decrypt(self.suite.as_ref(), &packet),
            Ok(Payload::Data(_))
        )
    }

    pub fn metrics(&self) -> SimMetrics {
        let mut m = self.metrics.clone();
        m.final_correct = self.correct;
        m.sim_time = self.time;
        m.decrypt_fail_rate = if m.packets_received == 0 {
            0.0
        } else {
            m.decrypt_failures as f64 / m.packets_received as f64
        };
        m
    }
}

/// Runs `cfg.transitions` events and returns the metrics.
pub fn run(cfg: &SimConfig) -> Result<SimMetrics, SimError> {
    let mut sim = Simulation::new(cfg.clone())?;
    sim.run_to_end();
    Ok(sim.metrics())
}
