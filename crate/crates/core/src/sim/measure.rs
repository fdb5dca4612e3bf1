use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{derive_seed, SimError, Simulation};
use super::{ConfigError, SimConfig};
use crate::analysis::{success_probability, SuccessForm};
use crate::protocol::NodeId;
use crate::stats;

/// Empirical `P{Y > 0}` for one value of `q` across independent runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessEstimate {
    pub q: f64,
    pub analytical: f64,
    /// One estimate per run.
    pub per_run: Vec<f64>,
    pub median: f64,
    pub q025: f64,
    pub q975: f64,
}

/// Per run: simulate `cfg.transitions` events and, after every post-burn-in
/// event, draw a source `l + 1` hops from the adversary's current cell. The
/// `l` relays in between flip their coins; the path succeeds when at least
/// one correct relay re-encrypts. Runs use derived seeds and execute in
/// parallel; results come back in run order.
pub fn measure_success(cfg: &SimConfig, l: usize, qs: &[f64]) -> Result<Vec<SuccessEstimate>, SimError> {
    cfg.validate()?;
    for &q in qs {
        if !(q > 0.0 && q < 1.0) {
            return Err(ConfigError::new("q", format!("must lie in (0, 1), got {q}")).into());
        }
    }
    let topo = super::GridTopology::new(cfg.n).map_err(|e| ConfigError::new("n", e.to_string()))?;
    if l == 0 || l + 1 > topo.diameter() {
        return Err(ConfigError::new(
            "l",
            format!("need 1 <= l < {} on a torus of {} nodes", topo.diameter(), cfg.n),
        )
        .into());
    }
    let per_run: Vec<Vec<f64>> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|run| success_run(cfg, derive_seed(cfg.seed, run), l, qs))
        .collect::<Result<_, _>>()?;
    let p0 = cfg.model()?.prob_relay_compromised();
    Ok(qs
        .iter()
        .enumerate()
        .map(|(j, &q)| {
            let v: Vec<f64> = per_run.iter().map(|r| r[j]).collect();
            SuccessEstimate {
                q,
                analytical: success_probability(p0, l, q, SuccessForm::Full).expect("validated"),
                median: stats::median(&v),
                q025: stats::quantile(&v, 0.025),
                q975: stats::quantile(&v, 0.975),
                per_run: v,
            }
        })
        .collect())
}

fn success_run(cfg: &SimConfig, seed: u64, l: usize, qs: &[f64]) -> Result<Vec<f64>, SimError> {
    let mut sim = Simulation::new(SimConfig {
        seed,
        report_every: 0,
        record_trace: false,
        ..cfg.clone()
    })?;
    sim.run_events(cfg.burn_in);
    let topo = *sim.topology();
    // Sources at distance l + 1, relative to cell 0; shifted onto the
    // adversary's cell by torus translation.
    let ring = topo.nodes_at_distance(NodeId(0), l + 1);
    let mut hits = vec![0u64; qs.len()];
    let samples = cfg.transitions - cfg.burn_in;
    for _ in 0..samples {
        sim.step();
        let adv = sim.adversary().position();
        for (j, &q) in qs.iter().enumerate() {
            let rng = sim.measure_rng();
            let offset = ring[rng.random_range(0..ring.len())];
            let source = translate(&topo, offset, adv);
            let path = topo.shortest_path(source, adv, sim.measure_rng());
            let mut success = false;
            for &relay in &path[1..=l] {
                let head = sim.measure_rng().random::<f64>() <= q;
                if head && sim.is_correct(relay) {
                    success = true;
                }
            }
            hits[j] += u64::from(success);
        }
    }
    Ok(hits.iter().map(|&h| h as f64 / samples as f64).collect())
}

fn translate(topo: &super::GridTopology, offset: NodeId, by: NodeId) -> NodeId {
    let (o, b) = (topo.cell(offset), topo.cell(by));
    let s = topo.side();
    topo.node_at(super::Cell {
        x: (o.x + b.x) % s,
        y: (o.y + b.y) % s,
    })
}

/// Empirical probability that `k` consecutive snapshots are all breached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreachPoint {
    pub k: u32,
    pub f_hat: f64,
    pub windows: u64,
    pub breached_windows: u64,
    /// `F^(1)^k`, the geometric prediction from the single-snapshot rate.
    pub geometric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreachReport {
    pub source: NodeId,
    pub collector: NodeId,
    pub q: f64,
    pub epochs_per_run: u64,
    pub epoch_events: u64,
    pub points: Vec<BreachPoint>,
    /// Least-squares slope of `ln F^(k)` on `k`, over the `k >= 1` points
    /// with at least one breached window.
    pub log_slope: f64,
    /// `log_slope / ln F^(1)`; 1 for exact geometric decay.
    pub slope_ratio: f64,
    #[serde(skip)]
    pub bits: Vec<Vec<bool>>,
}

/// Per run: after burn-in, send one snapshot every `cfg.epoch_spacing()`
/// events from `source` to `collector` over a shortest path fixed for the
/// run, with fresh coins each time. A snapshot is breached when the
/// adversary's stolen keys open every layer. `F^(k)` pools all windows of
/// `k` consecutive snapshots across runs.
pub fn measure_breach(
    cfg: &SimConfig,
    source: NodeId,
    collector: NodeId,
    k_max: u32,
) -> Result<BreachReport, SimError> {
    cfg.validate()?;
    if usize::from(source.0) >= cfg.n || usize::from(collector.0) >= cfg.n || source == collector {
        return Err(ConfigError::new("source", "source and collector must be distinct nodes of the grid").into());
    }
    if cfg.epochs == 0 {
        return Err(ConfigError::new("epochs", "must be at least 1").into());
    }
    let bits: Vec<Vec<bool>> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|run| breach_run(cfg, derive_seed(cfg.seed, run), source, collector))
        .collect::<Result<_, _>>()?;
    Ok(breach_report(cfg, source, collector, k_max, bits))
}

fn breach_run(cfg: &SimConfig, seed: u64, source: NodeId, collector: NodeId) -> Result<Vec<bool>, SimError> {
    let mut sim = Simulation::new(SimConfig {
        seed,
        report_every: 0,
        record_trace: false,
        ..cfg.clone()
    })?;
    sim.run_events(cfg.burn_in);
    let topo = *sim.topology();
    let path = topo.shortest_path(source, collector, sim.measure_rng());
    let mut out = Vec::with_capacity(cfg.epochs as usize);
    for _ in 0..cfg.epochs {
        sim.run_events(cfg.epoch_spacing());
        out.push(sim.snapshot_breached(&path));
    }
    Ok(out)
}

/// Pools sliding windows over each run's breach sequence.
pub fn breach_report(
    cfg: &SimConfig,
    source: NodeId,
    collector: NodeId,
    k_max: u32,
    bits: Vec<Vec<bool>>,
) -> BreachReport {
    let mut points = Vec::with_capacity(k_max as usize + 1);
    for k in 0..=k_max {
        let (mut windows, mut breached) = (0u64, 0u64);
        for run in &bits {
            let k = k as usize;
            if k == 0 {
                windows += run.len() as u64 + 1;
                breached += run.len() as u64 + 1;
                continue;
            }
            if run.len() < k {
                continue;
            }
            // Length of the current run of consecutive breaches.
            let mut streak = 0usize;
            for (i, &b) in run.iter().enumerate() {
                streak = if b { streak + 1 } else { 0 };
                if i + 1 >= k {
                    windows += 1;
                    breached += u64::from(streak >= k);
                }
            }
        }
        let f_hat = if windows == 0 {
            f64::NAN
        } else {
            breached as f64 / windows as f64
        };
        points.push(BreachPoint {
            k,
            f_hat,
            windows,
            breached_windows: breached,
            geometric: f64::NAN,
        });
    }
    let f1 = points.get(1).map_or(f64::NAN, |p| p.f_hat);
    for p in &mut points {
        p.geometric = f1.powi(p.k as i32);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.k >= 1 && p.breached_windows > 0)
        .map(|p| (f64::from(p.k), p.f_hat.ln()))
        .unzip();
    let log_slope = if xs.len() >= 2 {
        stats::ols_slope(&xs, &ys)
    } else {
        f64::NAN
    };
    BreachReport {
        source,
        collector,
        q: cfg.q,
        epochs_per_run: cfg.epochs,
        epoch_events: cfg.epoch_spacing(),
        slope_ratio: log_slope / f1.ln(),
        log_slope,
        points,
        bits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::SuiteKind;

    fn cfg() -> SimConfig {
        SimConfig {
            suite: SuiteKind::Toy,
            runs: 3,
            transitions: 3_000,
            burn_in: 500,
            ..SimConfig::default()
        }
    }

    #[test]
    fn sliding_windows_by_hand() {
        let bits = vec![vec![true, true, false, true, true, true]];
        let r = breach_report(&cfg(), NodeId(0), NodeId(1), 3, bits);
        let got: Vec<(u64, u64)> = r.points.iter().map(|p| (p.breached_windows, p.windows)).collect();
        assert_eq!(got, vec![(7, 7), (5, 6), (3, 5), (1, 4)]);
        assert_eq!(r.points[0].f_hat, 1.0);
        assert!(r.points.windows(2).all(|w| w[1].f_hat <= w[0].f_hat));
    }

    #[test]
    fn geometric_input_gives_unit_slope_ratio() {
        // A synthetic run where every window pattern is equally frequent:
        // a de Bruijn-like cycle of all 4-bit strings repeated.
        let mut seq = Vec::new();
        for _ in 0..200 {
            for v in 0u32..16 {
                for b in 0..4 {
                    seq.push(v >> b & 1 == 1);
                }
            }
        }
        let r = breach_report(&cfg(), NodeId(0), NodeId(1), 3, vec![seq]);
        assert!((r.points[1].f_hat - 0.5).abs() < 1e-3);
        assert!(r.slope_ratio > 0.8 && r.slope_ratio < 1.2, "{}", r.slope_ratio);
    }

    #[test]
    fn success_is_deterministic_and_sane() {
        let a = measure_success(&cfg(), 6, &[0.5, 0.9]).unwrap();
        let b = measure_success(&cfg(), 6, &[0.5, 0.9]).unwrap();
        assert_eq!(a, b);
        for e in &a {
            assert_eq!(e.per_run.len(), 3);
            assert!(e.q025 <= e.median && e.median <= e.q975);
            assert!(e.per_run.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        assert!(a[1].median > a[0].median);
        assert!(measure_success(&cfg(), 10, &[0.5]).is_err());
    }

    #[test]
    fn success_extremes() {
        // Adversary never acts: every head lands on a correct relay.
        let all_correct = SimConfig {
            tau: f64::INFINITY,
            ..cfg()
        };
        let e = &measure_success(&all_correct, 4, &[0.3]).unwrap()[0];
        let expected = 1.0 - 0.7f64.powi(4);
        let sd = (expected * (1.0 - expected) / 2_500.0).sqrt();
        assert!((e.median - expected).abs() < 4.0 * sd, "{} vs {expected}", e.median);
        // No refreshes: everything is compromised after burn-in.
        let none = SimConfig {
            lambda: 0.0,
            tau: 0.01,
            ..cfg()
        };
        let e = &measure_success(&none, 4, &[0.9]).unwrap()[0];
        assert_eq!(e.median, 0.0);
    }

    #[test]
    fn breach_runs_are_deterministic_and_monotone() {
        let c = SimConfig {
            epochs: 200,
            epoch_events: Some(20),
            ..cfg()
        };
        let a = measure_breach(&c, NodeId(0), NodeId(2), 3).unwrap();
        let b = measure_breach(&c, NodeId(0), NodeId(2), 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.points[0].f_hat, 1.0);
        assert!(a.points.windows(2).all(|w| w[1].f_hat <= w[0].f_hat));
        assert!(measure_breach(&c, NodeId(0), NodeId(0), 3).is_err());
    }
}
