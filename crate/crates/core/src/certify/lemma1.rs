use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// Tail-sup curve `G(t) = sup_{s ≥ t} g(s)` of a sampled bounded function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    times: Vec<f64>,
    tail: Vec<f64>,
}

impl TailCurve {
    pub fn new(times: Vec<f64>, values: &[f64]) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return contract("tail curve needs one value per time");
        }
        if times.windows(2).any(|w| w[1] <= w[0]) || values.iter().any(|v| !v.is_finite()) {
            return contract("tail curve times must increase and values must be finite");
        }
        let mut tail = values.to_vec();
        for k in (0..tail.len() - 1).rev() {
            tail[k] = tail[k].max(tail[k + 1]);
        }
        Ok(TailCurve { times, tail })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.tail
    }

    /// Sup over samples at times `≥ t`; beyond the last sample the last
    /// value is held.
    pub fn at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s < t).min(self.tail.len() - 1);
        self.tail[k]
    }

    /// Finite-horizon estimate of `lim_{t→∞} G(t)`: the tail at the last sample.
    pub fn limit(&self) -> f64 {
        *self.tail.last().unwrap()
    }

    /// `G(f(t))` at each `t` in `starts`.
    pub fn reparametrized(&self, f: impl Fn(f64) -> f64, starts: &[f64]) -> Vec<f64> {
        starts.iter().map(|&t| self.at(f(t))).collect()
    }

    /// Estimate of `lim_{t→∞} G(f(t))`: `G(f(t*))` for the largest sampled
    /// `t*` whose image stays within the sampled horizon.
    pub fn reparametrized_limit(&self, f: impl Fn(f64) -> f64, starts: &[f64]) -> Result<f64> {
        let end = *self.times.last().unwrap();
        starts
            .iter()
            .map(|&t| f(t))
            .filter(|&s| s <= end)
            .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s))))
            .map(|s| self.at(s))
            .ok_or_else(|| crate::error::Error::Contract("no reparametrized start falls inside the horizon".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_sup_is_nonincreasing_and_exact() {
        let times: Vec<f64> = (0..50).map(|k| k as f64).collect();
        let g: Vec<f64> = times.iter().map(|t| 1.0 + (-t / 5.0).exp() * (t).sin().abs()).collect();
        let c = TailCurve::new(times, &g).unwrap();
        assert!(c.values().windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(c.at(49.0), g[49]);
        assert_eq!(c.at(100.0), g[49]);
        let f = |t: f64| t * t;
        let starts: Vec<f64> = (0..100).map(|k| k as f64 * 0.1).collect();
        assert!((c.reparametrized_limit(f, &starts).unwrap() - c.limit()).abs() < 1e-3);
    }
}
