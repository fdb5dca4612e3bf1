use rand::RngCore;
use rand_distr::{Distribution, Exp};

use super::ProtocolError;

/// Samples a homogeneous Poisson process of rate `lambda_r` on `[0, horizon)`
/// and returns the event times in increasing order.
pub fn rgen_schedule(lambda_r: f64, horizon: f64, rng: &mut dyn RngCore) -> Result<Vec<f64>, ProtocolError> {
    if !lambda_r.is_finite() || lambda_r < 0.0 {
        return Err(ProtocolError::InvalidRate(lambda_r));
    }
    if lambda_r == 0.0 || horizon <= 0.0 {
        return Ok(Vec::new());
    }
    let gaps = Exp::new(lambda_r).expect("rate checked above");
    let mut times = Vec::new();
    let mut t = 0.0;
    loop {
        t += gaps.sample(rng);
        if t >= horizon {
            return Ok(times);
        }
        times.push(t);
    }
}
