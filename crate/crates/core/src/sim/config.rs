use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::Targeting;
use crate::analysis::MarkovModel;
use crate::crypto::SuiteKind;
use crate::protocol::{RefreshVariant, DEFAULT_HISTORY_WINDOW, DEFAULT_PAYLOAD_BUDGET};

/// A rejected configuration value, naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

/// Every parameter of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Number of nodes; must be a perfect square.
    pub n: usize,
    /// Re-encryption probability at each relay.
    pub q: f64,
    /// Sink refresh intensity.
    pub lambda: f64,
    /// Mean time between compromises.
    pub tau: f64,
    /// Per-node refresh rate. When set, the sink intensity becomes `n * lambda_r`.
    pub lambda_r: Option<f64>,
    /// Multiplier on the refresh intensity, in `(0, 1]`.
    pub epsilon: f64,
    /// Path length for success-probability evaluation.
    pub l: usize,
    /// Number of consecutive epochs for breach evaluation.
    pub k: u32,
    /// Fraction of nodes that report data.
    pub delta: f64,
    /// Copies sent of each refresh message.
    pub r: u32,
    pub transitions: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub variant: RefreshVariant,
    pub sink_targeting: Targeting,
    pub adversary_targeting: Targeting,
    pub suite: SuiteKind,
    /// Independent loss probability of each refresh copy.
    pub refresh_loss: f64,
    /// Run a data-collection epoch every this many events; 0 disables it.
    pub report_every: u64,
    /// Cell hosting the sink; all reports are routed there.
    pub sink_node: u16,
    /// Hop radius within which the adversary overhears traffic.
    pub intercept_radius: usize,
    /// Minimum simulated time between two compromises.
    pub min_gap: f64,
    pub payload_budget: usize,
    pub history_window: usize,
    /// Independent repetitions for the measurement drivers.
    pub runs: usize,
    /// Events between consecutive breach snapshots; `None` means `5 n`.
    pub epoch_events: Option<u64>,
    /// Number of breach snapshots per run.
    pub epochs: u64,
    /// Keep a per-event trace in the metrics and log every adversary intercept.
    pub record_trace: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 100,
            q: 0.7,
            lambda: 1.0,
            tau: 1.5,
            lambda_r: None,
            epsilon: 1.0,
            l: 6,
            k: 3,
            delta: 1.0,
            r: 1,
            transitions: 11_000,
            burn_in: 1_000,
            seed: 42,
            variant: RefreshVariant::Wrapped,
            sink_targeting: Targeting::Uniform,
            adversary_targeting: Targeting::Uniform,
            suite: SuiteKind::Standard,
            refresh_loss: 0.0,
            report_every: 0,
            sink_node: 0,
            intercept_radius: 0,
            min_gap: 0.0,
            payload_budget: DEFAULT_PAYLOAD_BUDGET,
            history_window: DEFAULT_HISTORY_WINDOW,
            runs: 20,
            epoch_events: None,
            epochs: 2_000,
            record_trace: false,
        }
    }
}

/// Keys accepted by [`SimConfig::set`].
pub const CONFIG_KEYS: &[&str] = &[
    "n",
    "q",
    "lambda",
    "tau",
    "lambda_r",
    "epsilon",
    "l",
    "k",
    "delta",
    "r",
    "transitions",
    "burn_in",
    "seed",
    "variant",
    "sink_targeting",
    "adversary_targeting",
    "suite",
    "refresh_loss",
    "report_every",
    "sink_node",
    "intercept_radius",
    "min_gap",
    "payload_budget",
    "history_window",
    "runs",
    "epoch_events",
    "epochs",
    "record_trace",
];

fn parse<T: FromStr>(field: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| ConfigError::new(field, format!("cannot parse `{value}`: {e}")))
}

fn parse_optional<T: FromStr>(field: &str, value: &str, none: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    if value.trim() == none {
        Ok(None)
    } else {
        parse(field, value).map(Some)
    }
}

impl SimConfig {
    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "n" => self.n = parse(key, value)?,
            "q" => self.q = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "tau" => self.tau = parse(key, value)?,
            "lambda_r" => self.lambda_r = parse_optional(key, value, "none")?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "l" => self.l = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "delta" => self.delta = parse(key, value)?,
            "r" => self.r = parse(key, value)?,
            "transitions" => self.transitions = parse(key, value)?,
            "burn_in" => self.burn_in = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "variant" => {
                let n: u8 = parse(key, value)?;
                self.variant =
                    RefreshVariant::from_number(n).ok_or_else(|| ConfigError::new(key, "expected 1 or 2"))?;
            }
            "sink_targeting" => self.sink_targeting = parse(key, value)?,
            "adversary_targeting" => self.adversary_targeting = parse(key, value)?,
            "suite" => self.suite = parse(key, value)?,
            "refresh_loss" => self.refresh_loss = parse(key, value)?,
            "report_every" => self.report_every = parse(key, value)?,
            "sink_node" => self.sink_node = parse(key, value)?,
            "intercept_radius" => self.intercept_radius = parse(key, value)?,
            "min_gap" => self.min_gap = parse(key, value)?,
            "payload_budget" => self.payload_budget = parse(key, value)?,
            "history_window" => self.history_window = parse(key, value)?,
            "runs" => self.runs = parse(key, value)?,
            "epoch_events" => self.epoch_events = parse_optional(key, value, "auto")?,
            "epochs" => self.epochs = parse(key, value)?,
            "record_trace" => self.record_trace = parse(key, value)?,
            other => return Err(ConfigError::new(other, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let side = (self.n as f64).sqrt().round() as usize;
        if self.n == 0 || side * side != self.n || self.n > 255 * 255 {
            return Err(ConfigError::new(
                "n",
                format!("{} is not a perfect square in 1..=65025", self.n),
            ));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(ConfigError::new("q", format!("must lie in (0, 1), got {}", self.q)));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(ConfigError::new(
                "lambda",
                format!("must be finite and >= 0, got {}", self.lambda),
            ));
        }
        if self.tau.is_nan() || self.tau <= 0.0 {
            return Err(ConfigError::new("tau", format!("must be > 0, got {}", self.tau)));
        }
        if let Some(lr) = self.lambda_r {
            if !(lr.is_finite() && lr >= 0.0) {
                return Err(ConfigError::new(
                    "lambda_r",
                    format!("must be finite and >= 0, got {lr}"),
                ));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(ConfigError::new(
                "epsilon",
                format!("must lie in (0, 1], got {}", self.epsilon),
            ));
        }
        if self.effective_lambda() + 1.0 / self.tau <= 0.0 {
            return Err(ConfigError::new(
                "lambda",
                "no events: refresh rate is 0 and tau is infinite",
            ));
        }
        if self.l == 0 {
            return Err(ConfigError::new("l", "must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(ConfigError::new(
                "delta",
                format!("must lie in (0, 1], got {}", self.delta),
            ));
        }
        if self.r == 0 {
            return Err(ConfigError::new("r", "must be at least 1"));
        }
        if self.burn_in >= self.transitions {
            return Err(ConfigError::new(
                "burn_in",
                format!("{} must be below transitions = {}", self.burn_in, self.transitions),
            ));
        }
        if !(0.0..=1.0).contains(&self.refresh_loss) {
            return Err(ConfigError::new(
                "refresh_loss",
                format!("must lie in [0, 1], got {}", self.refresh_loss),
            ));
        }
        if usize::from(self.sink_node) >= self.n {
            return Err(ConfigError::new(
                "sink_node",
                format!("{} is not a node of the grid", self.sink_node),
            ));
        }
        if !(self.min_gap.is_finite() && self.min_gap >= 0.0) {
            return Err(ConfigError::new(
                "min_gap",
                format!("must be finite and >= 0, got {}", self.min_gap),
            ));
        }
        if self.payload_budget == 0 {
            return Err(ConfigError::new("payload_budget", "must be at least 1"));
        }
        if self.runs == 0 {
            return Err(ConfigError::new("runs", "must be at least 1"));
        }
        Ok(())
    }

    /// The refresh intensity actually driving the sink.
    pub fn effective_lambda(&self) -> f64 {
        self.lambda_r.map_or(self.lambda, |lr| lr * self.n as f64) * self.epsilon
    }

    /// Events between breach snapshots.
    pub fn epoch_spacing(&self) -> u64 {
        self.epoch_events.unwrap_or(5 * self.n as u64)
    }

    /// Number of nodes that report data.
    pub fn reporting_nodes(&self) -> usize {
        ((self.delta * self.n as f64).ceil() as usize).clamp(1, self.n)
    }

    /// The analytical model matching this configuration.
    pub fn model(&self) -> Result<MarkovModel, ConfigError> {
        MarkovModel::new(self.n, self.effective_lambda(), self.tau)
            .map_err(|e| ConfigError::new("lambda", e.to_string()))
    }

    /// `key = value` lines for every field, in [`CONFIG_KEYS`] order.
    pub fn to_kv(&self) -> String {
        let opt = |v: Option<String>, none: &str| v.unwrap_or_else(|| none.to_string());
        let values = [
            self.n.to_string(),
            self.q.to_string(),
            self.lambda.to_string(),
            self.tau.to_string(),
            opt(self.lambda_r.map(|v| v.to_string()), "none"),
            self.epsilon.to_string(),
            self.l.to_string(),
            self.k.to_string(),
            self.delta.to_string(),
            self.r.to_string(),
            self.transitions.to_string(),
            self.burn_in.to_string(),
            self.seed.to_string(),
            self.variant.number().to_string(),
            self.sink_targeting.to_string(),
            self.adversary_targeting.to_string(),
            self.suite.to_string(),
            self.refresh_loss.to_string(),
            self.report_every.to_string(),
            self.sink_node.to_string(),
            self.intercept_radius.to_string(),
            self.min_gap.to_string(),
            self.payload_budget.to_string(),
            self.history_window.to_string(),
            self.runs.to_string(),
            opt(self.epoch_events.map(|v| v.to_string()), "auto"),
            self.epochs.to_string(),
            self.record_trace.to_string(),
        ];
        CONFIG_KEYS
            .iter()
            .zip(values)
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = SimConfig::default();
        c.validate().unwrap();
        assert_eq!((c.transitions, c.burn_in), (11_000, 1_000));
        assert_eq!(c.epoch_spacing(), 500);
    }

    #[test]
    fn kv_round_trip_covers_every_key() {
        let mut c = SimConfig {
            lambda_r: Some(0.01),
            epoch_events: Some(7),
            variant: RefreshVariant::Symmetric,
            adversary_targeting: Targeting::Walk,
            suite: SuiteKind::Toy,
            ..SimConfig::default()
        };
        c.tau = f64::INFINITY;
        let text = c.to_kv();
        let mut back = SimConfig::default();
        for line in text.lines() {
            let (k, v) = line.split_once('=').unwrap();
            back.set(k.trim(), v).unwrap();
        }
        assert_eq!(back, c);
        assert_eq!(text.lines().count(), CONFIG_KEYS.len());
    }

    #[test]
    fn errors_name_the_field() {
        let mut c = SimConfig::default();
        assert_eq!(c.set("bogus", "1").unwrap_err().field, "bogus");
        assert_eq!(c.set("q", "abc").unwrap_err().field, "q");
        assert_eq!(c.set("variant", "3").unwrap_err().field, "variant");
        for (key, value) in [
            ("n", "10"),
            ("q", "1.0"),
            ("tau", "0"),
            ("burn_in", "11000"),
            ("delta", "0"),
            ("r", "0"),
            ("sink_node", "100"),
        ] {
            let mut c = SimConfig::default();
            c.set(key, value).unwrap();
            assert_eq!(c.validate().unwrap_err().field, key, "{key}={value}");
        }
        let c = SimConfig {
            lambda: 0.0,
            tau: f64::INFINITY,
            ..SimConfig::default()
        };
        assert_eq!(c.validate().unwrap_err().field, "lambda");
    }

    #[test]
    fn per_node_rate_scales_to_sink_rate() {
        let c = SimConfig {
            lambda_r: Some(0.01),
            epsilon: 0.5,
            ..SimConfig::default()
        };
        assert!((c.effective_lambda() - 0.5).abs() < 1e-12);
        assert_eq!(
            SimConfig {
                delta: 0.05,
                ..SimConfig::default()
            }
            .reporting_nodes(),
            5
        );
    }
}
