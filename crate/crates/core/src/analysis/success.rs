use serde::{Deserialize, Serialize};

use super::{AnalysisError, MarkovModel};
use crate::sim::GridTopology;

/// Which evaluation of `P{Y = 0}` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessForm {
    /// `((1 - q) + q P0)^L`: the generating function of a binomial number of
    /// re-encryptions, including the case of none.
    #[default]
    Full,
    /// The same sum started at one re-encryption, dropping the `(1 - q)^L`
    /// term.
    Eq4Literal,
}

fn check_q(q: f64) -> Result<(), AnalysisError> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(AnalysisError::InvalidParameter(format!(
            "q must lie in (0, 1), got {q}"
        )))
    }
}

/// `P{Y > 0}`: at least one correct relay among `l` re-encrypted the packet.
pub fn success_probability(p0: f64, l: usize, q: f64, form: SuccessForm) -> Result<f64, AnalysisError> {
    if l == 0 {
        return Err(AnalysisError::InvalidParameter("path length must be at least 1".into()));
    }
    check_q(q)?;
    if !(0.0..=1.0).contains(&p0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "P0 must lie in [0, 1], got {p0}"
        )));
    }
    let l = l as i32;
    let p_zero = ((1.0 - q) + q * p0).powi(l);
    Ok(match form {
        SuccessForm::Full => 1.0 - p_zero,
        SuccessForm::Eq4Literal => 1.0 - (p_zero - (1.0 - q).powi(l)),
    })
}

impl MarkovModel {
    pub fn success_probability(&self, l: usize, q: f64) -> Result<f64, AnalysisError> {
        success_probability(self.prob_relay_compromised(), l, q, SuccessForm::Full)
    }
}

/// Probability that all of `k` independent snapshots are breached, each with
/// probability `f1`.
pub fn breach_probability(f1: f64, k: u32) -> Result<f64, AnalysisError> {
    if !(0.0..=1.0).contains(&f1) {
        return Err(AnalysisError::InvalidParameter(format!(
            "f1 must lie in [0, 1], got {f1}"
        )));
    }
    Ok(f1.powi(k as i32))
}

/// Single-snapshot breach probability averaged over a path-length
/// distribution given as `(L, weight)` pairs. Weights are normalized.
pub fn f1_over_paths(p0: f64, q: f64, lengths: &[(usize, f64)]) -> Result<f64, AnalysisError> {
    let total: f64 = lengths.iter().map(|(_, w)| w).sum();
    if lengths.is_empty() || total <= 0.0 {
        return Err(AnalysisError::InvalidParameter("empty path-length distribution".into()));
    }
    let mut f1 = 0.0;
    for &(l, w) in lengths {
        f1 += w / total * (1.0 - success_probability(p0, l, q, SuccessForm::Full)?);
    }
    Ok(f1)
}

/// Hop counts between a node and every other node of the torus, as a
/// distribution. The torus is vertex transitive, so one origin suffices.
pub fn path_length_distribution(topo: &GridTopology) -> Vec<(usize, f64)> {
    let mut counts = vec![0usize; topo.diameter() + 1];
    let origin = crate::protocol::NodeId(0);
    for n in topo.nodes().filter(|&n| n != origin) {
        counts[topo.distance(origin, n)] += 1;
    }
    let others = (topo.node_count() - 1).max(1) as f64;
    counts
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(l, c)| (l, c as f64 / others))
        .collect()
}

pub const TABLE1_LENGTHS: [usize; 8] = [5, 6, 7, 8, 9, 10, 11, 12];
pub const TABLE1_QS: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];
/// The one published cell that breaks monotonicity in both L and q.
pub const SUSPECT_CELL: (usize, f64) = (11, 0.7);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub l: usize,
    pub q: f64,
    pub p_success: f64,
    pub suspect: bool,
}

/// `P{Y > 0}` over the grid `L = 5..=12`, `q = 0.5..=0.9`.
pub fn table1(model: &MarkovModel) -> Vec<Table1Row> {
    let p0 = model.prob_relay_compromised();
    let mut rows = Vec::with_capacity(TABLE1_LENGTHS.len() * TABLE1_QS.len());
    for l in TABLE1_LENGTHS {
        for q in TABLE1_QS {
            rows.push(Table1Row {
                l,
                q,
                p_success: success_probability(p0, l, q, SuccessForm::Full).expect("grid is valid"),
                suspect: (l, q) == SUSPECT_CELL,
            });
        }
    }
    rows
}
