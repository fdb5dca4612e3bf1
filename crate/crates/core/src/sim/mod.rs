//! Discrete-event simulation on the torus: the sink refreshes and the
//! adversary compromises nodes as two independent Poisson streams, and the
//! measurement drivers sample success and breach rates from the running
//! system.

mod config;
mod engine;
mod measure;
mod topology;

pub use config::{ConfigError, SimConfig, CONFIG_KEYS};
pub use engine::{derive_seed, run, EventKind, SimError, SimMetrics, Simulation, TraceEntry, Transit};
pub use measure::{breach_report, measure_breach, measure_success, BreachPoint, BreachReport, SuccessEstimate};
pub use topology::{Cell, GridTopology, TopologyError, DIRECTIONS};
