//! Closed-form results: the birth-death model of correct nodes, the
//! per-message success probability, breach probability over several
//! snapshots, and the energy comparison against public-key encryption.

mod energy;
mod markov;
mod success;

use thiserror::Error;

pub use energy::{energy_compare, EnergyModel, EnergyReport, EnergyRow, RefreshCost};
pub use markov::{MarkovModel, StationaryDistribution, TransitionRow};
pub use success::{
    breach_probability, f1_over_paths, path_length_distribution, success_probability, table1, SuccessForm, Table1Row,
    SUSPECT_CELL, TABLE1_LENGTHS, TABLE1_QS,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("state {i} outside 0..={n}")]
    StateOutOfRange { i: usize, n: usize },
}
