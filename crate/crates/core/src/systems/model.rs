use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::expr::Expression;
use crate::error::{contract, Error, Result};

/// Right-hand side of a scalar subsystem: a discrete map `x⁺ = A(x, w, u)` or a
/// vector field `ẋ = f(x, w, u)`, depending on the network's time domain.
/// `w` holds the values of the declared neighbors, in order.
#[derive(Clone, Debug, PartialEq)]
pub enum Dynamics {
    /// `a x + Σ_k b_k w_k + c u`
    Linear { a: f64, b: Vec<f64>, c: f64 },
    /// `max(a x, b_0 w_0, …, c u)`
    Max { a: f64, b: Vec<f64>, c: f64 },
    /// User expression in `x`, `w0`, `w1`, …, `u`.
    Expr(Expression),
}

/// One subsystem of a network: its dynamics and the indices it reads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SubsystemJson", into = "SubsystemJson")]
pub struct SubsystemSpec {
    dynamics: Dynamics,
    neighbors: Vec<usize>,
}

/// Variable names for an expression reading `n` neighbors.
pub fn expr_vars(n: usize) -> Vec<String> {
    let mut v = vec!["x".to_string()];
    v.extend((0..n).map(|k| format!("w{k}")));
    v.push("u".to_string());
    v
}

impl SubsystemSpec {
    pub fn new(dynamics: Dynamics, neighbors: Vec<usize>) -> Result<Self> {
        let n = neighbors.len();
        match &dynamics {
            Dynamics::Linear { a, b, c } | Dynamics::Max { a, b, c } => {
                if b.len() != n {
                    return contract(format!("{} neighbor coefficients for {n} neighbors", b.len()));
                }
                if ![*a, *c].iter().chain(b).all(|v| v.is_finite()) {
                    return contract("dynamics coefficients must be finite");
                }
                if matches!(dynamics, Dynamics::Max { .. }) && ![*a, *c].iter().chain(b).all(|v| *v >= 0.0) {
                    return contract("max dynamics need nonnegative coefficients");
                }
            }
            Dynamics::Expr(e) => {
                if e.arity() != n + 2 {
                    return contract("expression compiled for a different neighbor count");
                }
            }
        }
        let mut sorted = neighbors.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != n {
            return contract("neighbor list has duplicates");
        }
        Ok(SubsystemSpec { dynamics, neighbors })
    }

    pub fn linear(a: f64, b: Vec<(usize, f64)>, c: f64) -> Result<Self> {
        let (neighbors, b) = b.into_iter().unzip();
        Self::new(Dynamics::Linear { a, b, c }, neighbors)
    }

    pub fn max(a: f64, b: Vec<(usize, f64)>, c: f64) -> Result<Self> {
        let (neighbors, b) = b.into_iter().unzip();
        Self::new(Dynamics::Max { a, b, c }, neighbors)
    }

    pub fn expr(source: &str, neighbors: Vec<usize>, consts: &BTreeMap<String, f64>) -> Result<Self> {
        let names = expr_vars(neighbors.len());
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Self::new(Dynamics::Expr(Expression::compile(source, &refs, consts)?), neighbors)
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn neighbors(&self) -> &[usize] {
        &self.neighbors
    }

    /// Same dynamics with neighbors outside `keep` removed. Removed neighbors
    /// read zero, which for expressions is realized by binding them to 0.
    pub fn restrict_neighbors(&self, keep: impl Fn(usize) -> bool) -> Result<Self> {
        let kept: Vec<usize> = (0..self.neighbors.len()).filter(|&k| keep(self.neighbors[k])).collect();
        if kept.len() == self.neighbors.len() {
            return Ok(self.clone());
        }
        let neighbors: Vec<usize> = kept.iter().map(|&k| self.neighbors[k]).collect();
        let dynamics = match &self.dynamics {
            Dynamics::Linear { a, b, c } => Dynamics::Linear { a: *a, b: kept.iter().map(|&k| b[k]).collect(), c: *c },
            Dynamics::Max { a, b, c } => Dynamics::Max { a: *a, b: kept.iter().map(|&k| b[k]).collect(), c: *c },
            Dynamics::Expr(e) => {
                let names = expr_vars(kept.len());
                let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                Dynamics::Expr(Expression::compile(&rename_source(e.source(), &kept), &refs, e.consts())?)
            }
        };
        SubsystemSpec::new(dynamics, neighbors)
    }

    /// `A(x, w, u)` or `f(x, w, u)`.
    #[inline]
    pub fn rhs(&self, x: f64, w: &[f64], u: f64) -> f64 {
        match &self.dynamics {
            Dynamics::Linear { a, b, c } => a * x + b.iter().zip(w).map(|(b, w)| b * w).sum::<f64>() + c * u,
            Dynamics::Max { a, b, c } => b
                .iter()
                .zip(w)
                .map(|(b, w)| b * w)
                .fold((a * x).max(c * u), f64::max),
            Dynamics::Expr(e) => {
                let mut vars = Vec::with_capacity(w.len() + 2);
                vars.push(x);
                vars.extend_from_slice(w);
                vars.push(u);
                e.eval(&vars)
            }
        }
    }
}

/// Textual form of an expression after dropping neighbors: surviving `w_k`
/// become `w0, w1, …` and dropped ones become `0`.
pub(crate) fn rename_source(src: &str, kept: &[usize]) -> String {
    let mut out = String::with_capacity(src.len());
    let chars: Vec<char> = src.chars().collect();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        let boundary = k == 0 || !(chars[k - 1].is_ascii_alphanumeric() || chars[k - 1] == '_');
        if c == 'w' && boundary && k + 1 < chars.len() && chars[k + 1].is_ascii_digit() {
            let mut j = k + 1;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let ends = j == chars.len() || !(chars[j].is_ascii_alphanumeric() || chars[j] == '_');
            if ends {
                let old: usize = chars[k + 1..j].iter().collect::<String>().parse().unwrap();
                match kept.iter().position(|&m| m == old) {
                    Some(p) => out.push_str(&format!("w{p}")),
                    None => out.push_str("(0)"),
                }
                k = j;
                continue;
            }
        }
        out.push(c);
        k += 1;
    }
    out
}

/// One step of a discrete map; a non-finite result is reported as blow-up
/// after one step.
pub fn step_discrete(spec: &SubsystemSpec, x: f64, w: &[f64], u: f64) -> Result<f64> {
    if w.len() != spec.neighbors.len() {
        return contract(format!("{} neighbor values for {} neighbors", w.len(), spec.neighbors.len()));
    }
    let next = spec.rhs(x, w, u);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::BlowUp { time: 1.0, component: 0, detail: format!("discrete map returned {next}") })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SubsystemJson {
    Linear {
        a: f64,
        #[serde(default)]
        b: Vec<f64>,
        #[serde(default)]
        c: f64,
        #[serde(default)]
        neighbors: Vec<usize>,
    },
    Max {
        a: f64,
        #[serde(default)]
        b: Vec<f64>,
        #[serde(default)]
        c: f64,
        #[serde(default)]
        neighbors: Vec<usize>,
    },
    Expr {
        expr: String,
        #[serde(default)]
        neighbors: Vec<usize>,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
}

impl From<SubsystemSpec> for SubsystemJson {
    fn from(s: SubsystemSpec) -> Self {
        match s.dynamics {
            Dynamics::Linear { a, b, c } => SubsystemJson::Linear { a, b, c, neighbors: s.neighbors },
            Dynamics::Max { a, b, c } => SubsystemJson::Max { a, b, c, neighbors: s.neighbors },
            Dynamics::Expr(e) => SubsystemJson::Expr {
                expr: e.source().to_string(),
                neighbors: s.neighbors,
                params: e.consts().clone(),
            },
        }
    }
}

impl TryFrom<SubsystemJson> for SubsystemSpec {
    type Error = Error;
    fn try_from(j: SubsystemJson) -> Result<Self> {
        match j {
            SubsystemJson::Linear { a, b, c, neighbors } => SubsystemSpec::new(Dynamics::Linear { a, b, c }, neighbors),
            SubsystemJson::Max { a, b, c, neighbors } => SubsystemSpec::new(Dynamics::Max { a, b, c }, neighbors),
            SubsystemJson::Expr { expr, neighbors, params } => SubsystemSpec::expr(&expr, neighbors, &params),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_examples() {
        let m = SubsystemSpec::max(0.5, vec![(1, 0.25)], 1.0).unwrap();
        assert_eq!(step_discrete(&m, 1.0, &[4.0], 0.0).unwrap(), 1.0);
        let l = SubsystemSpec::linear(0.5, vec![(1, 0.25)], 1.0).unwrap();
        assert_eq!(step_discrete(&l, 2.0, &[0.0], 1.0).unwrap(), 2.0);
        for s in [&m, &l] {
            assert_eq!(step_discrete(s, 0.0, &[0.0], 0.0).unwrap(), 0.0);
        }
        assert!(step_discrete(&l, 2.0, &[], 1.0).is_err());
        let blow = SubsystemSpec::expr("1/x", vec![], &BTreeMap::new()).unwrap();
        assert!(matches!(step_discrete(&blow, 0.0, &[], 0.0), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn expr_matches_linear() {
        let e = SubsystemSpec::expr("-x + 0.1*(w0 + w1) + u", vec![0, 2], &BTreeMap::new()).unwrap();
        let l = SubsystemSpec::linear(-1.0, vec![(0, 0.1), (2, 0.1)], 1.0).unwrap();
        assert_eq!(e.rhs(0.3, &[1.0, 2.0], 0.5), l.rhs(0.3, &[1.0, 2.0], 0.5));
    }

    #[test]
    fn restriction_drops_neighbors() {
        let e = SubsystemSpec::expr("-x + w0 + 2*w1 + u", vec![3, 5], &BTreeMap::new()).unwrap();
        let r = e.restrict_neighbors(|j| j == 5).unwrap();
        assert_eq!(r.neighbors(), &[5]);
        assert_eq!(r.rhs(1.0, &[2.0], 0.5), -1.0 + 4.0 + 0.5);
        match r.dynamics() {
            Dynamics::Expr(x) => assert_eq!(x.source(), "-x + (0) + 2*w0 + u"),
            _ => panic!(),
        }
        let l = SubsystemSpec::linear(-1.0, vec![(3, 1.0), (5, 2.0)], 1.0).unwrap();
        let r = l.restrict_neighbors(|j| j == 3).unwrap();
        assert_eq!(r.rhs(1.0, &[2.0], 0.0), 1.0);
    }

    #[test]
    fn json_forms() {
        let s: SubsystemSpec =
            serde_json::from_str(r#"{"kind": "expr", "expr": "-x/k + u", "params": {"k": 2}}"#).unwrap();
        assert_eq!(s.rhs(1.0, &[], 0.0), -0.5);
        let s: SubsystemSpec = serde_json::from_str(r#"{"kind": "max", "a": 0.5, "b": [0.25], "neighbors": [1]}"#).unwrap();
        assert_eq!(s.rhs(1.0, &[4.0], 0.0), 1.0);
        assert!(serde_json::from_str::<SubsystemSpec>(r#"{"kind": "linear", "a": 1, "b": [1]}"#).is_err());
    }
}
