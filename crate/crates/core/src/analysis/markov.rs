use serde::{Deserialize, Serialize};

use super::AnalysisError;

/// Birth-death model of the number of correct nodes under two independent
/// Poisson processes: sink refreshes at rate `lambda` and compromises at
/// rate `1 / tau`, each hitting a node chosen uniformly at random.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovModel {
    n: usize,
    lambda: f64,
    tau: f64,
}

/// One row of the embedded jump chain: probabilities of moving down, staying
/// and moving up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionRow {
    pub mu: f64,
    pub s: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
}

impl MarkovModel {
    /// `tau` may be infinite (no compromises) and `lambda` zero (no
    /// refreshes), but not both at once.
    pub fn new(n: usize, lambda: f64, tau: f64) -> Result<Self, AnalysisError> {
        if n == 0 {
            return Err(AnalysisError::InvalidParameter("n must be at least 1".into()));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(AnalysisError::InvalidParameter(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        if tau.is_nan() || tau <= 0.0 {
            return Err(AnalysisError::InvalidParameter(format!("tau must be > 0, got {tau}")));
        }
        if lambda + 1.0 / tau <= 0.0 {
            return Err(AnalysisError::InvalidParameter(
                "lambda = 0 and tau = inf leave the chain without events".into(),
            ));
        }
        Ok(Self { n, lambda, tau })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Total event rate `lambda + 1/tau`.
    pub fn event_rate(&self) -> f64 {
        self.lambda + 1.0 / self.tau
    }

    /// Probability that a given event is a sink refresh.
    pub fn refresh_share(&self) -> f64 {
        self.lambda / self.event_rate()
    }

    pub fn transition_row(&self, i: usize) -> Result<TransitionRow, AnalysisError> {
        if i > self.n {
            return Err(AnalysisError::StateOutOfRange { i, n: self.n });
        }
        let n = self.n as f64;
        let i = i as f64;
        let mu = i / (n * self.tau * self.event_rate());
        let nu = (n - i) * self.lambda / (n * self.event_rate());
        Ok(TransitionRow {
            mu,
            s: 1.0 - mu - nu,
            nu,
        })
    }

    fn rows(&self) -> Vec<TransitionRow> {
        (0..=self.n)
            .map(|i| self.transition_row(i).expect("in range"))
            .collect()
    }

    /// Product-form stationary distribution, evaluated in log space.
    pub fn stationary(&self) -> StationaryDistribution {
        let n = self.n;
        let mut pi = vec![0.0; n + 1];
        if self.lambda == 0.0 {
            pi[0] = 1.0;
            return StationaryDistribution { pi };
        }
        if (1.0 / self.tau) == 0.0 {
            pi[n] = 1.0;
            return StationaryDistribution { pi };
        }
        let rows = self.rows();
        let mut log_pi = vec![0.0; n + 1];
        for i in 1..=n {
            log_pi[i] = log_pi[i - 1] + rows[i - 1].nu.ln() - rows[i].mu.ln();
        }
        let max = log_pi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = log_pi.iter().map(|l| (l - max).exp()).sum();
        for (p, l) in pi.iter_mut().zip(&log_pi) {
            *p = (l - max).exp() / z;
        }
        StationaryDistribution { pi }
    }

    /// One step of the jump chain applied to a row vector: `pi P`.
    pub fn step(&self, pi: &[f64]) -> Vec<f64> {
        let rows = self.rows();
        let n = self.n;
        (0..=n)
            .map(|j| {
                let mut v = pi[j] * rows[j].s;
                if j > 0 {
                    v += pi[j - 1] * rows[j - 1].nu;
                }
                if j < n {
                    v += pi[j + 1] * rows[j + 1].mu;
                }
                v
            })
            .collect()
    }

    /// Max-norm of `pi P - pi`.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        self.step(pi)
            .iter()
            .zip(pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Power iteration from the uniform vector. Used as an independent check
    /// of [`stationary`](Self::stationary).
    pub fn stationary_iterative(&self, tol: f64, max_iter: usize) -> StationaryDistribution {
        let mut pi = vec![1.0 / (self.n + 1) as f64; self.n + 1];
        for _ in 0..max_iter {
            let next = self.step(&pi);
            let delta = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            pi = next;
            if delta < tol {
                break;
            }
        }
        StationaryDistribution { pi }
    }

    /// Probability that a uniformly chosen node is compromised in the
    /// stationary regime: `(N - E[X]) / N`.
    pub fn prob_relay_compromised(&self) -> f64 {
        let e = self.stationary().mean();
        (self.n as f64 - e) / self.n as f64
    }
}

impl StationaryDistribution {
    pub fn mean(&self) -> f64 {
        self.pi.iter().enumerate().map(|(i, p)| i as f64 * p).sum()
    }

    pub fn mode(&self) -> usize {
        self.pi
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    pub fn total(&self) -> f64 {
        self.pi.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln_binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
        let ln_fact = |m: usize| (1..=m).map(|v| (v as f64).ln()).sum::<f64>();
        ln_fact(n) - ln_fact(k) - ln_fact(n - k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()
    }

    #[test]
    fn rows_are_stochastic_with_reflecting_ends() {
        let m = MarkovModel::new(100, 1.0, 1.5).unwrap();
        for i in 0..=100 {
            let r = m.transition_row(i).unwrap();
            assert!((r.mu + r.s + r.nu - 1.0).abs() < 1e-15);
            assert!(r.mu >= 0.0 && r.s >= 0.0 && r.nu >= 0.0);
        }
        let r0 = m.transition_row(0).unwrap();
        let rate = 1.0 + 1.0 / 1.5;
        assert_eq!(r0.mu, 0.0);
        assert!((r0.nu - 1.0 / rate).abs() < 1e-15);
        assert!((r0.s - (1.0 / 1.5) / rate).abs() < 1e-15);
        let rn = m.transition_row(100).unwrap();
        assert_eq!(rn.nu, 0.0);
        assert!((rn.mu - 1.0 / (1.5 * rate)).abs() < 1e-15);
        assert!(m.transition_row(101).is_err());
    }

    #[test]
    fn two_state_chain_by_hand() {
        for (lambda, tau) in [(1.0, 1.5), (0.3, 2.0), (2.0, 0.1)] {
            let pi = MarkovModel::new(1, lambda, tau).unwrap().stationary().pi;
            let lt = lambda * tau;
            assert!((pi[0] - 1.0 / (1.0 + lt)).abs() < 1e-14);
            assert!((pi[1] - lt / (1.0 + lt)).abs() < 1e-14);
        }
    }

    #[test]
    fn product_form_is_binomial_and_balanced() {
        for (n, lambda, tau) in [(100, 1.0, 1.5), (100, 1.0, 0.6), (37, 0.4, 3.0), (1000, 1.0, 1.0)] {
            let m = MarkovModel::new(n, lambda, tau).unwrap();
            let pi = m.stationary();
            let p = lambda * tau / (1.0 + lambda * tau);
            for (k, v) in pi.pi.iter().enumerate() {
                assert!((v - ln_binomial_pmf(n, k, p).exp()).abs() < 1e-12, "n={n} k={k}");
            }
            assert!(m.residual(&pi.pi) < 1e-12);
            assert!((pi.total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn iterative_solution_agrees() {
        let m = MarkovModel::new(100, 1.0, 1.5).unwrap();
        let a = m.stationary().pi;
        let b = m.stationary_iterative(1e-15, 200_000).pi;
        let gap = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-10, "gap {gap}");
    }

    #[test]
    fn canonical_mode_mean_and_tails() {
        let m = MarkovModel::new(100, 1.0, 1.5).unwrap();
        let pi = m.stationary();
        assert_eq!(pi.mode(), 60);
        assert!((pi.mean() - 60.0).abs() < 1e-9);
        assert!((m.prob_relay_compromised() - 0.4).abs() < 1e-12);
        assert!(pi.pi[0] < 1e-15 && pi.pi[100] < 1e-15);
        let sym = MarkovModel::new(100, 2.0, 0.5).unwrap();
        assert!((sym.prob_relay_compromised() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_rates() {
        let no_refresh = MarkovModel::new(10, 0.0, 1.0).unwrap().stationary();
        assert_eq!(no_refresh.pi[0], 1.0);
        let no_attack = MarkovModel::new(10, 1.0, f64::INFINITY).unwrap();
        assert_eq!(no_attack.stationary().pi[10], 1.0);
        assert_eq!(no_attack.prob_relay_compromised(), 0.0);
        assert!(MarkovModel::new(10, 0.0, f64::INFINITY).is_err());
        assert!(MarkovModel::new(0, 1.0, 1.0).is_err());
        assert!(MarkovModel::new(10, -1.0, 1.0).is_err());
    }
}
