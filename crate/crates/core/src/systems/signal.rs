use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};

/// Piecewise-constant vector signal on `[0, ∞)`.
///
/// Piece `k` holds `values[k]` on `(breaks[k], breaks[k+1]]`; the first piece
/// also covers `t = 0` and the last one extends to infinity. An optional
/// `origin` value overrides the signal at `t = 0` alone (a degenerate piece
/// `[0, 0]`), which arises from shifting or truncating at a breakpoint.
///
/// Signals are kept normalized: adjacent pieces carry different values, so
/// structural equality is equality as functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalJson", into = "SignalJson")]
pub struct InputSignal {
    breaks: Vec<f64>,
    values: Vec<Vec<f64>>,
    origin: Option<Vec<f64>>,
    norm: f64,
}

fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

impl InputSignal {
    pub fn new(breaks: Vec<f64>, values: Vec<Vec<f64>>, origin: Option<Vec<f64>>) -> Result<Self> {
        if breaks.is_empty() || breaks.len() != values.len() {
            return contract("signal needs one value per break");
        }
        if breaks[0] != 0.0 {
            return contract("signal breaks must start at 0");
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) || breaks.iter().any(|b| !b.is_finite()) {
            return contract("signal breaks must be finite and strictly increasing");
        }
        let dim = values[0].len();
        if values.iter().chain(origin.iter()).any(|v| v.len() != dim) {
            return contract("signal values must share one dimension");
        }
        if values.iter().chain(origin.iter()).flatten().any(|x| !x.is_finite()) {
            return contract("signal values must be finite");
        }
        let mut s = InputSignal { breaks, values, origin, norm: 0.0 };
        s.normalize();
        Ok(s)
    }

    pub fn constant(value: Vec<f64>) -> Result<Self> {
        Self::new(vec![0.0], vec![value], None)
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(vec![0.0; dim]).expect("zero signal is valid")
    }

    /// Scalar signal from `(start, value)` pieces.
    pub fn scalar_steps(pieces: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pieces.iter().map(|p| p.0).collect(),
            pieces.iter().map(|p| vec![p.1]).collect(),
            None,
        )
    }

    fn normalize(&mut self) {
        let mut breaks = Vec::with_capacity(self.breaks.len());
        let mut values: Vec<Vec<f64>> = Vec::with_capacity(self.values.len());
        for (b, v) in self.breaks.drain(..).zip(self.values.drain(..)) {
            if values.last() != Some(&v) {
                breaks.push(b);
                values.push(v);
            }
        }
        self.breaks = breaks;
        self.values = values;
        if self.origin.as_ref() == Some(&self.values[0]) {
            self.origin = None;
        }
        self.norm = self
            .values
            .iter()
            .chain(self.origin.iter())
            .map(|v| vec_norm(v))
            .fold(0.0, f64::max);
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn origin(&self) -> Option<&[f64]> {
        self.origin.as_deref()
    }

    /// `sup_t |u(t)|_∞`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// `u(t)`.
    pub fn value_at(&self, t: f64) -> &[f64] {
        if t <= 0.0 {
            return self.origin.as_deref().unwrap_or(&self.values[0]);
        }
        let k = self.breaks.partition_point(|&b| b < t);
        &self.values[k - 1]
    }

    /// Right limit `u(t+)`, the value on `(t, t + δ)` for small `δ`.
    pub fn value_after(&self, t: f64) -> &[f64] {
        let k = self.breaks.partition_point(|&b| b <= t.max(0.0));
        &self.values[k - 1]
    }

    /// Sup norm over `[0, t]`.
    pub fn norm_until(&self, t: f64) -> f64 {
        let mut n = vec_norm(self.value_at(0.0));
        for (k, v) in self.values.iter().enumerate() {
            if self.breaks[k] < t {
                n = n.max(vec_norm(v));
            }
        }
        n
    }

    /// `u(· + tau)`.
    pub fn shift(&self, tau: f64) -> Result<Self> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return contract(format!("shift must be finite and nonnegative, got {tau}"));
        }
        if tau == 0.0 {
            return Ok(self.clone());
        }
        let (breaks, values) = self.shift_open(tau);
        Self::new(breaks, values, Some(self.value_at(tau).to_vec()))
    }

    /// Causal truncation: `u` on `[0, t]`, zero afterwards. Idempotent.
    pub fn truncate(&self, t: f64) -> Result<Self> {
        self.concat(t, &Self::zero(self.dim()))
    }

    /// Concatenation: `self` on `[0, t]`, `other(· - t)` on `(t, ∞)`.
    pub fn concat(&self, t: f64, other: &InputSignal) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return contract(format!("splice time must be finite and nonnegative, got {t}"));
        }
        if other.dim() != self.dim() {
            return contract("concatenated signals must share one dimension");
        }
        if t == 0.0 {
            // only u(0) survives from the left operand
            let after = other.shift_open(0.0);
            return Self::new(after.0, after.1, Some(self.value_at(0.0).to_vec()));
        }
        let mut breaks = Vec::new();
        let mut values = Vec::new();
        for (k, &b) in self.breaks.iter().enumerate() {
            if b < t {
                breaks.push(b);
                values.push(self.values[k].clone());
            }
        }
        let (ob, ov) = other.shift_open(0.0);
        for (b, v) in ob.into_iter().zip(ov) {
            breaks.push(b + t);
            values.push(v);
        }
        Self::new(breaks, values, self.origin.clone())
    }

    /// Pieces of the signal on `(tau, ∞)`, rebased to start at 0.
    fn shift_open(&self, tau: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
        let k = self.breaks.partition_point(|&b| b <= tau) - 1;
        let mut breaks = vec![0.0];
        let mut values = vec![self.values[k].clone()];
        for m in k + 1..self.breaks.len() {
            breaks.push(self.breaks[m] - tau);
            values.push(self.values[m].clone());
        }
        (breaks, values)
    }

    /// Component `c` as a scalar signal.
    pub fn component(&self, c: usize) -> Result<Self> {
        if c >= self.dim() {
            return contract(format!("component {c} out of range for a {}-dimensional signal", self.dim()));
        }
        Self::new(
            self.breaks.clone(),
            self.values.iter().map(|v| vec![v[c]]).collect(),
            self.origin.as_ref().map(|v| vec![v[c]]),
        )
    }

    /// Stack scalar-or-vector signals into one signal over the union of breaks.
    pub fn stack(parts: &[&InputSignal]) -> Result<Self> {
        if parts.is_empty() {
            return contract("cannot stack zero signals");
        }
        let mut breaks: Vec<f64> = parts.iter().flat_map(|p| p.breaks.iter().copied()).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let values = breaks
            .iter()
            .map(|&b| parts.iter().flat_map(|p| p.value_after(b).iter().copied()).collect())
            .collect();
        let origin = if parts.iter().any(|p| p.origin.is_some()) {
            Some(parts.iter().flat_map(|p| p.value_at(0.0).iter().copied()).collect())
        } else {
            None
        };
        Self::new(breaks, values, origin)
    }

    /// Zero-order hold through samples: `values[n]` on `(times[n], times[n+1]]`,
    /// with `values[0]` also at `t = 0`.
    pub fn zero_order_hold(times: &[f64], values: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(times.to_vec(), values, None)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ValueJson {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl From<ValueJson> for Vec<f64> {
    fn from(v: ValueJson) -> Self {
        match v {
            ValueJson::Scalar(x) => vec![x],
            ValueJson::Vector(v) => v,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SignalJson {
    breaks: Vec<f64>,
    values: Vec<ValueJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    origin: Option<ValueJson>,
}

impl From<InputSignal> for SignalJson {
    fn from(s: InputSignal) -> Self {
        SignalJson {
            breaks: s.breaks,
            values: s.values.into_iter().map(ValueJson::Vector).collect(),
            origin: s.origin.map(ValueJson::Vector),
        }
    }
}

impl TryFrom<SignalJson> for InputSignal {
    type Error = Error;
    fn try_from(j: SignalJson) -> Result<Self> {
        InputSignal::new(j.breaks, j.values.into_iter().map(Into::into).collect(), j.origin.map(Into::into))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn steps(p: &[(f64, f64)]) -> InputSignal {
        InputSignal::scalar_steps(p).unwrap()
    }

    #[test]
    fn right_closed_pieces() {
        let s = steps(&[(0.0, 1.0), (2.0, 3.0)]);
        assert_eq!(s.value_at(0.0), &[1.0]);
        assert_eq!(s.value_at(2.0), &[1.0]);
        assert_eq!(s.value_after(2.0), &[3.0]);
        assert_eq!(s.value_at(2.5), &[3.0]);
        assert_eq!(s.norm(), 3.0);
        assert_eq!(s.norm_until(2.0), 1.0);
    }

    #[test]
    fn truncation_examples() {
        let one = InputSignal::constant(vec![1.0]).unwrap();
        let t2 = one.truncate(2.0).unwrap();
        assert_eq!(t2.value_at(2.0), &[1.0]);
        assert_eq!(t2.value_after(2.0), &[0.0]);
        assert_eq!(t2.truncate(2.0).unwrap(), t2);
        let t0 = one.truncate(0.0).unwrap();
        assert_eq!(t0.value_at(0.0), &[1.0]);
        assert_eq!(t0.value_at(1e-12), &[0.0]);
        assert_eq!(t0.truncate(0.0).unwrap(), t0);
    }

    #[test]
    fn concat_then_truncate_gives_left() {
        let a = steps(&[(0.0, 1.0), (0.5, -2.0), (1.5, 4.0)]);
        let b = steps(&[(0.0, 7.0), (1.0, 8.0)]);
        let c = a.concat(1.0, &b).unwrap();
        assert_eq!(c.value_at(1.0), &[-2.0]);
        assert_eq!(c.value_at(1.5), &[7.0]);
        assert_eq!(c.value_at(2.5), &[8.0]);
        assert_eq!(c.truncate(1.0).unwrap(), a.truncate(1.0).unwrap());
    }

    #[test]
    fn shift_semantics() {
        let a = steps(&[(0.0, 1.0), (1.0, 5.0), (2.0, 2.0)]);
        let s = a.shift(1.0).unwrap();
        assert_eq!(s.value_at(0.0), &[1.0]);
        assert_eq!(s.value_at(0.5), &[5.0]);
        assert_eq!(s.value_at(1.5), &[2.0]);
        assert!(s.norm() <= a.norm());
        assert_eq!(a.shift(3.0).unwrap().norm(), 2.0);
    }

    #[test]
    fn normalizes_equal_pieces() {
        let a = steps(&[(0.0, 1.0), (1.0, 1.0), (2.0, 3.0)]);
        assert_eq!(a.breaks(), &[0.0, 2.0]);
        assert!(InputSignal::scalar_steps(&[(0.5, 1.0)]).is_err());
        assert!(InputSignal::scalar_steps(&[(0.0, 1.0), (0.0, 2.0)]).is_err());
    }

    #[test]
    fn json_accepts_scalars() {
        let s: InputSignal = serde_json::from_str(r#"{"breaks": [0, 1], "values": [1, 2]}"#).unwrap();
        assert_eq!(s.value_at(1.5), &[2.0]);
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["values"], serde_json::json!([[1.0], [2.0]]));
    }

    #[test]
    fn stack_components() {
        let a = steps(&[(0.0, 1.0), (1.0, 2.0)]);
        let b = steps(&[(0.0, 3.0), (0.5, 4.0)]);
        let s = InputSignal::stack(&[&a, &b]).unwrap();
        assert_eq!(s.value_at(0.7), &[1.0, 4.0]);
        assert_eq!(s.component(1).unwrap(), b);
    }
}
