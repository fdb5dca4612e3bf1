use serde::{Deserialize, Serialize};

use super::AnalysisError;

/// Per-message energy figures for the symmetric scheme and two public-key
/// baselines. Computation costs are in microjoules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub c_gc: f64,
    pub c_rsa: f64,
    pub c_ecc: f64,
    /// Radio cost per transmitted bit, microjoules.
    pub tx_cost: f64,
    /// Extra bits a re-encryption adds to a packet (one node id).
    pub id_bits: f64,
    pub rsa_bits: f64,
    pub ecc_bits: f64,
    /// Plain measurement size.
    pub message_bits: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            c_gc: 32.4,
            c_rsa: 14_100.0,
            c_ecc: 53_400.0,
            tx_cost: 0.21,
            id_bits: 16.0,
            rsa_bits: 1024.0,
            ecc_bits: 320.0,
            message_bits: 160.0,
        }
    }
}

/// How a refreshed key reaches the sink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefreshCost {
    /// One symmetric encryption.
    Symmetric,
    /// One symmetric encryption plus one ECC encryption of the new key.
    EccWrapped,
}

impl EnergyModel {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        let all = [
            self.c_gc,
            self.c_rsa,
            self.c_ecc,
            self.tx_cost,
            self.id_bits,
            self.rsa_bits,
            self.ecc_bits,
            self.message_bits,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(AnalysisError::InvalidParameter(
                "energy parameters must be positive".into(),
            ))
        }
    }

    pub fn c_refresh(&self, mode: RefreshCost) -> f64 {
        match mode {
            RefreshCost::Symmetric => self.c_gc,
            RefreshCost::EccWrapped => self.c_gc + self.c_ecc,
        }
    }

    /// Computation spent per message when each of `n` nodes is refreshed
    /// once every `n` measurement periods.
    pub fn amortized_cost(&self, n: f64, mode: RefreshCost) -> f64 {
        (n * self.c_gc + self.c_refresh(mode)) / n
    }

    /// How many times cheaper the scheme is than one PKE per message.
    pub fn advantage(&self, n: f64, c_pke: f64, mode: RefreshCost) -> f64 {
        n * c_pke / (n * self.c_gc + self.c_refresh(mode))
    }

    /// The same ratio with the scheme's own per-message cost neglected:
    /// `N c_pke / c_refresh`.
    pub fn advantage_refresh_dominated(&self, n: f64, c_pke: f64, mode: RefreshCost) -> f64 {
        n * c_pke / self.c_refresh(mode)
    }

    /// Hop count below which the per-hop id overhead stays under the
    /// ciphertext expansion of a public-key scheme producing `pke_bits`.
    pub fn crossover_hops(&self, pke_bits: f64, q: f64) -> f64 {
        (pke_bits - self.message_bits) / (self.id_bits * q)
    }
}

/// One line of the energy report. `None` marks a cell that does not apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub metric: String,
    pub gossicrypt: Option<f64>,
    pub pke_rsa: Option<f64>,
    pub pke_ecc: Option<f64>,
}

impl EnergyRow {
    fn new(metric: &str, g: Option<f64>, r: Option<f64>, e: Option<f64>) -> Self {
        Self {
            metric: metric.to_string(),
            gossicrypt: g,
            pke_rsa: r,
            pke_ecc: e,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub n: usize,
    pub q: f64,
    pub hops: f64,
    pub rows: Vec<EnergyRow>,
}

impl EnergyReport {
    pub fn get(&self, metric: &str) -> Option<&EnergyRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }
}

pub fn energy_compare(e: &EnergyModel, n: usize, q: f64, hops: f64) -> Result<EnergyReport, AnalysisError> {
    e.validate()?;
    if n == 0 {
        return Err(AnalysisError::InvalidParameter("n must be at least 1".into()));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "q must lie in (0, 1], got {q}"
        )));
    }
    if !(hops.is_finite() && hops >= 0.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "hops must be >= 0, got {hops}"
        )));
    }
    let nf = n as f64;
    use RefreshCost::{EccWrapped, Symmetric};
    let gc_bits = e.id_bits * q * hops;
    let rows = vec![
        EnergyRow::new("computation_uj_per_msg", Some(e.c_gc), Some(e.c_rsa), Some(e.c_ecc)),
        EnergyRow::new("refresh_cost_symmetric_uj", Some(e.c_refresh(Symmetric)), None, None),
        EnergyRow::new("refresh_cost_ecc_wrapped_uj", Some(e.c_refresh(EccWrapped)), None, None),
        EnergyRow::new(
            "amortized_symmetric_uj",
            Some(e.amortized_cost(nf, Symmetric)),
            Some(e.c_rsa),
            Some(e.c_ecc),
        ),
        EnergyRow::new(
            "amortized_ecc_wrapped_uj",
            Some(e.amortized_cost(nf, EccWrapped)),
            Some(e.c_rsa),
            Some(e.c_ecc),
        ),
        EnergyRow::new(
            "advantage_symmetric",
            Some(1.0),
            Some(e.advantage(nf, e.c_rsa, Symmetric)),
            Some(e.advantage(nf, e.c_ecc, Symmetric)),
        ),
        EnergyRow::new(
            "advantage_ecc_wrapped",
            Some(1.0),
            Some(e.advantage(nf, e.c_rsa, EccWrapped)),
            Some(e.advantage(nf, e.c_ecc, EccWrapped)),
        ),
        EnergyRow::new(
            "advantage_ecc_wrapped_refresh_dominated",
            Some(1.0),
            Some(e.advantage_refresh_dominated(nf, e.c_rsa, EccWrapped)),
            Some(e.advantage_refresh_dominated(nf, e.c_ecc, EccWrapped)),
        ),
        EnergyRow::new("comm_bits_per_msg", Some(gc_bits), Some(e.rsa_bits), Some(e.ecc_bits)),
        EnergyRow::new(
            "comm_uj_per_msg",
            Some(gc_bits * e.tx_cost),
            Some(e.rsa_bits * e.tx_cost),
            Some(e.ecc_bits * e.tx_cost),
        ),
        EnergyRow::new(
            "crossover_hops",
            None,
            Some(e.crossover_hops(e.rsa_bits, q)),
            Some(e.crossover_hops(e.ecc_bits, q)),
        ),
    ];
    Ok(EnergyReport { n, q, hops, rows })
}
