//! Built-in networks with analytic ground truth.
//!
//! | name | time | dynamics |
//! |------|------|----------|
//! | `counterexample-chain` | continuous | `ẋ_i = −x_i / i`, `i ≥ 1` |
//! | `uniform-2-cycle` | discrete | `x_i⁺ = max(a x_i, c x_{1−i}, u_i)` |
//! | `nonuniform-discrete-chain` | discrete | `x_i⁺ = a_i x_i + θ(1−a_i) x_{i+1} + g(1−a_i) u_i`, `a_i = 1 − 1/(i+2)` |
//! | `linear-diffusive-chain` | continuous | `ẋ_i = −x_i + ε(x_{i−1} + x_{i+1}) + u_i` |
//!
//! Stored gains for the discrete chain come from summing the geometric
//! series of the scalar recursion:
//! `|x_i(k)| ≤ a_i^k |x_i(0)| + (b_i ‖w‖ + c_i ‖u‖)/(1 − a_i) = a_i^k |x_i(0)| + θ‖w‖ + g‖u‖`.
//! The 2-cycle is bounded the same way after replacing `max` by `+`, which
//! gives `c/(1−a)` and `1/(1−a)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::comparison::ScalarCurve;
use crate::error::{contract, Error, Result};
use crate::gains::{GainGraph, IndexSet, Window};
use crate::network::{NetworkDefaults, NetworkSpec, SubsystemRule};
use crate::systems::{SubsystemSpec, TimeDomain};

pub const NAMES: [&str; 4] =
    ["counterexample-chain", "uniform-2-cycle", "nonuniform-discrete-chain", "linear-diffusive-chain"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Family {
    CounterexampleChain,
    Uniform2Cycle { a: f64, c: f64 },
    NonuniformDiscreteChain { theta: f64, g: f64 },
    LinearDiffusiveChain { eps: f64 },
}

fn params_of(name: &str) -> &'static [(&'static str, f64)] {
    match name {
        "counterexample-chain" => &[("dt", 1e-3)],
        "uniform-2-cycle" => &[("a", 0.5), ("c", 0.25)],
        "nonuniform-discrete-chain" => &[("theta", 0.5), ("g", 2.0)],
        "linear-diffusive-chain" => &[("eps", 0.1), ("dt", 1e-3)],
        _ => &[],
    }
}

fn in_range(name: &str, v: f64, lo: f64, hi: f64) -> Result<f64> {
    if v.is_finite() && v >= lo && v < hi {
        Ok(v)
    } else {
        contract(format!("parameter {name} = {v} outside [{lo}, {hi})"))
    }
}

/// Parameters with defaults filled in; unknown keys are rejected.
pub fn resolve_params(name: &str, params: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    if !NAMES.contains(&name) {
        return contract(format!("unknown catalog entry '{name}'"));
    }
    let schema = params_of(name);
    if let Some(k) = params.keys().find(|k| !schema.iter().any(|(s, _)| s == k)) {
        return contract(format!("catalog entry '{name}' has no parameter '{k}'"));
    }
    Ok(schema.iter().map(|&(k, d)| (k.to_string(), params.get(k).copied().unwrap_or(d))).collect())
}

fn family(name: &str, p: &BTreeMap<String, f64>) -> Result<Family> {
    let p = resolve_params(name, p)?;
    if let Some(&dt) = p.get("dt") {
        in_range("dt", dt, f64::MIN_POSITIVE, f64::INFINITY)?;
    }
    Ok(match name {
        "counterexample-chain" => Family::CounterexampleChain,
        "uniform-2-cycle" => Family::Uniform2Cycle { a: in_range("a", p["a"], 0.0, 1.0)?, c: in_range("c", p["c"], 0.0, f64::INFINITY)? },
        "nonuniform-discrete-chain" => Family::NonuniformDiscreteChain {
            theta: in_range("theta", p["theta"], 0.0, 1.0)?,
            g: in_range("g", p["g"], 0.0, f64::INFINITY)?,
        },
        _ => Family::LinearDiffusiveChain { eps: in_range("eps", p["eps"], 0.0, 0.5)? },
    })
}

impl Family {
    fn subsystem(&self, i: usize) -> Result<SubsystemSpec> {
        match *self {
            Family::CounterexampleChain => {
                if i == 0 {
                    return contract("the counterexample chain starts at index 1");
                }
                SubsystemSpec::linear(-1.0 / i as f64, vec![], 0.0)
            }
            Family::Uniform2Cycle { a, c } => {
                if i > 1 {
                    return contract(format!("index {i} is not in the 2-cycle"));
                }
                let nb = if c > 0.0 { vec![(1 - i, c)] } else { vec![] };
                SubsystemSpec::max(a, nb, 1.0)
            }
            Family::NonuniformDiscreteChain { theta, g } => {
                let d = 1.0 / (i as f64 + 2.0);
                let nb = if theta > 0.0 { vec![(i + 1, theta * d)] } else { vec![] };
                SubsystemSpec::linear(1.0 - d, nb, g * d)
            }
            Family::LinearDiffusiveChain { eps } => {
                let mut nb = Vec::new();
                if eps > 0.0 {
                    if i > 0 {
                        nb.push((i - 1, eps));
                    }
                    nb.push((i + 1, eps));
                }
                SubsystemSpec::linear(-1.0, nb, 1.0)
            }
        }
    }
}

/// Subsystem `i` of catalog family `name`.
pub fn family_subsystem(name: &str, params: &BTreeMap<String, f64>, i: usize) -> Result<SubsystemSpec> {
    family(name, params)?.subsystem(i)
}

/// A catalog network together with its analytic ground truth.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub family: Family,
    pub spec: NetworkSpec,
    /// Uniform bound `‖φ(t, x, 0)‖ ≤ σ(‖x‖)`.
    pub sigma: ScalarCurve,
    /// MBI inverse gain of the stored gain operator, when it exists.
    pub xi: Option<ScalarCurve>,
}

pub fn instantiate(name: &str, params: &BTreeMap<String, f64>) -> Result<CatalogEntry> {
    let fam = family(name, params)?;
    let params = resolve_params(name, params)?;
    let lin = |a: f64| ScalarCurve::linear(a);
    let dt = params.get("dt").copied().unwrap_or(1e-3);
    let gen = |rule: &str, p: Vec<(&str, f64)>| -> Result<(IndexSet, GainGraph)> {
        let p: BTreeMap<String, f64> = p.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let g = GainGraph::generator(rule, p)?;
        Ok((g.index_set().clone(), g))
    };
    let (time_domain, index_set, graph, xi, defaults) = match fam {
        Family::CounterexampleChain => {
            let (is, g) = gen("empty", vec![("start", 1.0), ("external", 0.0)])?;
            let d = NetworkDefaults { window: Some(50), horizon: Some(5.0), x0: Some(1.0) };
            (TimeDomain::Continuous { dt }, is, g, Some(ScalarCurve::identity()), d)
        }
        Family::Uniform2Cycle { a, c } => {
            let gamma = c / (1.0 - a);
            let g = GainGraph::finite(2, vec![(0, 1, lin(gamma)?), (1, 0, lin(gamma)?)], vec![
                (0, lin(1.0 / (1.0 - a))?),
                (1, lin(1.0 / (1.0 - a))?),
            ])?;
            let xi = (gamma < 1.0).then(|| lin(1.0 / (1.0 - gamma))).transpose()?;
            let d = NetworkDefaults { window: Some(2), horizon: Some(50.0), x0: Some(1.0) };
            (TimeDomain::Discrete, IndexSet::Finite { n: 2 }, g, xi, d)
        }
        Family::NonuniformDiscreteChain { theta, g } => {
            let (is, graph) = gen("chain", vec![("theta", theta), ("external", g)])?;
            let d = NetworkDefaults { window: Some(64), horizon: Some(2000.0), x0: Some(1.0) };
            (TimeDomain::Discrete, is, graph, Some(lin(1.0 / (1.0 - theta))?), d)
        }
        Family::LinearDiffusiveChain { eps } => {
            let (is, graph) = gen("bichain", vec![("left", 2.0 * eps), ("right", 2.0 * eps), ("external", 1.0)])?;
            let d = NetworkDefaults { window: Some(20), horizon: Some(10.0), x0: Some(1.0) };
            (TimeDomain::Continuous { dt }, is, graph, Some(lin(1.0 / (1.0 - 2.0 * eps))?), d)
        }
    };
    let mut rule_params = params.clone();
    rule_params.remove("dt");
    let spec = NetworkSpec {
        time_domain,
        index_set,
        subsystems: SubsystemRule::Catalog { name: name.to_string(), params: rule_params },
        gain_graph: Some(graph),
        defaults,
    };
    spec.validate()?;
    Ok(CatalogEntry { name: name.to_string(), params, family: fam, spec, sigma: ScalarCurve::identity(), xi })
}

/// Split `catalog:<name>?k=v&k=v` into the name and its parameters.
pub fn parse_ref(reference: &str) -> Result<(String, BTreeMap<String, f64>)> {
    let rest = reference
        .strip_prefix("catalog:")
        .ok_or_else(|| Error::Parse(format!("'{reference}' is not a catalog reference")))?;
    let (name, query) = rest.split_once('?').unwrap_or((rest, ""));
    let mut params = BTreeMap::new();
    for pair in query.split('&').filter(|s| !s.is_empty()) {
        let (k, v) = pair.split_once('=').ok_or_else(|| Error::Parse(format!("expected k=v, got '{pair}'")))?;
        let v: f64 = v.trim().parse().map_err(|_| Error::Parse(format!("parameter {k} is not a number: '{v}'")))?;
        if params.insert(k.trim().to_string(), v).is_some() {
            return Err(Error::Parse(format!("parameter {k} given twice")));
        }
    }
    Ok((name.to_string(), params))
}

pub fn from_ref(reference: &str) -> Result<CatalogEntry> {
    let (name, params) = parse_ref(reference)?;
    instantiate(&name, &params)
}

impl CatalogEntry {
    /// Closed-form state at time `t` for zero input, starting from `x0` on
    /// window `q`. Discrete entries evaluate their recursion directly.
    pub fn solution(&self, q: &Window, x0: &[f64], t: f64) -> Result<Vec<f64>> {
        if x0.len() != q.len() {
            return contract("initial state does not match the window");
        }
        if let Some(&i) = q.indices().iter().find(|&&i| !self.spec.index_set.contains(i)) {
            return contract(format!("index {i} is not in '{}'", self.name));
        }
        match self.family {
            Family::CounterexampleChain => {
                Ok(q.indices().iter().zip(x0).map(|(&i, &x)| (-t / i as f64).exp() * x).collect())
            }
            Family::Uniform2Cycle { a, c } => {
                let mut x = x0.to_vec();
                let other = |p: usize| q.position(1 - q.indices()[p]);
                for _ in 0..t.round() as usize {
                    x = (0..x.len())
                        .map(|p| {
                            let w = other(p).filter(|_| c > 0.0).map_or(0.0, |o| c * x[o]);
                            (a * x[p]).max(w).max(0.0)
                        })
                        .collect();
                }
                Ok(x)
            }
            Family::NonuniformDiscreteChain { theta, .. } => {
                let mut x = x0.to_vec();
                for _ in 0..t.round() as usize {
                    x = (0..x.len())
                        .map(|p| {
                            let i = q.indices()[p];
                            let d = 1.0 / (i as f64 + 2.0);
                            let own = (1.0 - d) * x[p];
                            match q.position(i + 1) {
                                Some(n) if theta > 0.0 => own + theta * d * x[n],
                                _ => own,
                            }
                        })
                        .collect();
                }
                Ok(x)
            }
            Family::LinearDiffusiveChain { eps } => {
                let idx = q.indices();
                if idx.windows(2).any(|w| w[1] != w[0] + 1) {
                    return contract("the diffusive chain oracle needs a contiguous window");
                }
                Ok(tridiagonal_flow(eps, x0, t))
            }
        }
    }
}

/// `exp(t (−I + εT)) x0` for the tridiagonal `T` with unit off-diagonals,
/// via its sine eigenbasis.
fn tridiagonal_flow(eps: f64, x0: &[f64], t: f64) -> Vec<f64> {
    let n = x0.len();
    let h = std::f64::consts::PI / (n as f64 + 1.0);
    let norm = (2.0 / (n as f64 + 1.0)).sqrt();
    let v = |j: usize, k: usize| norm * (((j + 1) * (k + 1)) as f64 * h).sin();
    let mut out = vec![0.0; n];
    for k in 0..n {
        let lambda = -1.0 + 2.0 * eps * ((k + 1) as f64 * h).cos();
        let coef: f64 = (0..n).map(|j| v(j, k) * x0[j]).sum::<f64>() * (lambda * t).exp();
        for (j, o) in out.iter_mut().enumerate() {
            *o += coef * v(j, k);
        }
    }
    out
}
