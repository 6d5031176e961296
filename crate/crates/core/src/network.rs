//! Feedback interconnections of scalar subsystems over finite working windows.
//!
//! A [`NetworkSpec`] describes a possibly infinite network by a rule
//! `i ↦ SubsystemSpec`. Computation always happens on a finite [`Window`]:
//! neighbors outside the window contribute zero.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::error::{contract, Error, Result};
use crate::gains::{GainGraph, IndexSet, Window};
use crate::systems::{
    expr_vars, local_error_estimate, rename_source, rk4_drive, step_count, BlowUpInfo, InputSignal, SubsystemSpec,
    TimeDomain, Trajectory, TransitionMap,
};
use crate::systems::expr::Expression;
use crate::systems::Dynamics;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexedSubsystem {
    pub i: usize,
    #[serde(flatten)]
    pub spec: SubsystemSpec,
}

/// How the subsystem at index `i` is obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SubsystemRule {
    /// One explicit subsystem per index of a finite index set.
    List { subsystems: Vec<IndexedSubsystem> },
    /// One expression for all indices; neighbor `w_k` is index `i + offsets[k]`
    /// and the name `i` is bound to the component index.
    Template {
        expr: String,
        #[serde(default)]
        offsets: Vec<i64>,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    /// A built-in family from the catalog.
    Catalog {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkDefaults {
    pub window: Option<usize>,
    pub horizon: Option<f64>,
    pub x0: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub time_domain: TimeDomain,
    pub index_set: IndexSet,
    pub subsystems: SubsystemRule,
    #[serde(default)]
    pub gain_graph: Option<GainGraph>,
    #[serde(default)]
    pub defaults: NetworkDefaults,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        self.time_domain.validate()?;
        if let SubsystemRule::List { subsystems } = &self.subsystems {
            let full = self
                .index_set
                .full_window()
                .ok_or_else(|| Error::Contract("an explicit subsystem list needs a finite index set".into()))?;
            let mut seen: Vec<usize> = subsystems.iter().map(|s| s.i).collect();
            seen.sort_unstable();
            if seen != full.indices() {
                return contract("subsystem list must name every index exactly once");
            }
        }
        if let Some(g) = &self.gain_graph {
            if g.index_set().is_finite() != self.index_set.is_finite() {
                return contract("gain graph and network disagree on the index set");
            }
        }
        Ok(())
    }

    /// Subsystem at index `i`, with its full neighbor list.
    pub fn subsystem(&self, i: usize) -> Result<SubsystemSpec> {
        if !self.index_set.contains(i) {
            return contract(format!("index {i} is not in the network"));
        }
        match &self.subsystems {
            SubsystemRule::List { subsystems } => subsystems
                .iter()
                .find(|s| s.i == i)
                .map(|s| s.spec.clone())
                .ok_or_else(|| Error::Contract(format!("no subsystem listed for index {i}"))),
            SubsystemRule::Template { expr, offsets, params } => {
                let mut consts = params.clone();
                consts.insert("i".into(), i as f64);
                let (kept, neighbors): (Vec<usize>, Vec<usize>) = offsets
                    .iter()
                    .enumerate()
                    .filter_map(|(k, &o)| {
                        let j = i as i64 + o;
                        (j >= 0 && self.index_set.contains(j as usize)).then_some((k, j as usize))
                    })
                    .unzip();
                let src = if kept.len() == offsets.len() { expr.clone() } else { rename_source(expr, &kept) };
                let names = expr_vars(neighbors.len());
                let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                SubsystemSpec::new(Dynamics::Expr(Expression::compile(&src, &refs, &consts)?), neighbors)
            }
            SubsystemRule::Catalog { name, params } => catalog::family_subsystem(name, params, i),
        }
    }

    /// The first `n` indices, or the configured default window.
    pub fn window(&self, n: Option<usize>) -> Result<Window> {
        let n = n.or(self.defaults.window).or_else(|| self.index_set.full_window().map(|w| w.len()));
        match n {
            Some(n) => self.index_set.window(n),
            None => contract("generator networks need an explicit window size"),
        }
    }

    pub fn compile(&self, window: &Window) -> Result<CompiledNetwork> {
        self.validate()?;
        let mut specs = Vec::with_capacity(window.len());
        let mut nbr_pos = Vec::with_capacity(window.len());
        for &i in window.indices() {
            let s = self.subsystem(i)?.restrict_neighbors(|j| window.contains(j))?;
            nbr_pos.push(s.neighbors().iter().map(|&j| window.position(j).unwrap()).collect());
            specs.push(s);
        }
        Ok(CompiledNetwork { domain: self.time_domain, window: window.clone(), specs, nbr_pos })
    }

    /// Indices `(i, j)` where subsystem `i` reads `j` but the gain graph has no `γ_ij`.
    pub fn unclaimed_couplings(&self, window: &Window) -> Result<Vec<(usize, usize)>> {
        let Some(g) = &self.gain_graph else { return Ok(Vec::new()) };
        let mut out = Vec::new();
        for &i in window.indices() {
            let row: Vec<usize> = g.row(i).into_iter().map(|(j, _)| j).collect();
            for &j in self.subsystem(i)?.neighbors() {
                if window.contains(j) && !row.contains(&j) {
                    out.push((i, j));
                }
            }
        }
        Ok(out)
    }
}

/// A network compiled on a window: subsystem `p` is index `window[p]` and
/// reads the states at positions `nbr_pos[p]`.
#[derive(Clone, Debug)]
pub struct CompiledNetwork {
    domain: TimeDomain,
    window: Window,
    specs: Vec<SubsystemSpec>,
    nbr_pos: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub blowup_bound: f64,
    /// Keep every `record_every`-th sample; the endpoint is always kept.
    pub record_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { blowup_bound: 1e12, record_every: 1 }
    }
}

impl CompiledNetwork {
    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn time_domain(&self) -> TimeDomain {
        self.domain
    }

    pub fn specs(&self) -> &[SubsystemSpec] {
        &self.specs
    }

    pub fn neighbor_positions(&self, p: usize) -> &[usize] {
        &self.nbr_pos[p]
    }

    fn input_of(u: &[f64], p: usize) -> f64 {
        if u.len() == 1 {
            u[0]
        } else {
            u[p]
        }
    }

    /// Right-hand side of the coupled system at state `x` with input value `u`.
    pub fn field(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        let mut w = Vec::with_capacity(4);
        for (p, spec) in self.specs.iter().enumerate() {
            w.clear();
            w.extend(self.nbr_pos[p].iter().map(|&q| x[q]));
            out[p] = spec.rhs(x[p], &w, Self::input_of(u, p));
        }
    }

    fn check_inputs(&self, x0: &[f64], u: &InputSignal, horizon: f64) -> Result<()> {
        if x0.len() != self.len() {
            return contract(format!("initial state has {} entries for a window of {}", x0.len(), self.len()));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return contract("initial state must be finite");
        }
        if u.dim() != 1 && u.dim() != self.len() {
            return contract(format!("input dimension {} must be 1 or the window size {}", u.dim(), self.len()));
        }
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return contract(format!("horizon must be finite and nonnegative, got {horizon}"));
        }
        Ok(())
    }

    /// Simulate and hand every grid sample `(k, t_k, x_k)` to `observe`.
    /// Discrete horizons are rounded to whole steps.
    pub fn simulate_with(
        &self,
        x0: &[f64],
        u: &InputSignal,
        horizon: f64,
        blowup_bound: f64,
        mut observe: impl FnMut(usize, f64, &[f64]),
    ) -> Result<Option<BlowUpInfo>> {
        self.check_inputs(x0, u, horizon)?;
        match self.domain {
            TimeDomain::Discrete => {
                let steps = horizon.round() as usize;
                let mut x = x0.to_vec();
                let mut next = vec![0.0; x.len()];
                observe(0, 0.0, &x);
                for k in 0..steps {
                    self.field(&x, u.value_at(k as f64), &mut next);
                    std::mem::swap(&mut x, &mut next);
                    if let Some(p) = x.iter().position(|v| !(v.is_finite() && v.abs() <= blowup_bound)) {
                        return Ok(Some(BlowUpInfo { time: (k + 1) as f64, component: p, value: x[p] }));
                    }
                    observe(k + 1, (k + 1) as f64, &x);
                }
                Ok(None)
            }
            TimeDomain::Continuous { dt } => Ok(rk4_drive(
                x0,
                horizon,
                dt,
                blowup_bound,
                |t, y, dy| self.field(y, u.value_after(t), dy),
                observe,
            )),
        }
    }

    /// Number of grid steps for `horizon`.
    pub fn steps(&self, horizon: f64) -> usize {
        match self.domain {
            TimeDomain::Discrete => horizon.round() as usize,
            TimeDomain::Continuous { dt } => step_count(horizon, dt),
        }
    }

    pub fn simulate(&self, x0: &[f64], u: &InputSignal, horizon: f64, cfg: &SimConfig) -> Result<Trajectory> {
        let mut traj = Trajectory::new(self.window.indices().to_vec());
        let n = self.steps(horizon);
        let stride = cfg.record_every.max(1);
        let blow = self.simulate_with(x0, u, horizon, cfg.blowup_bound, |k, t, x| {
            if k % stride == 0 || k == n {
                traj.push(t, x.to_vec());
            }
        })?;
        traj.blow_up = blow;
        Ok(traj)
    }
}

impl TransitionMap for CompiledNetwork {
    fn time_domain(&self) -> TimeDomain {
        self.domain
    }

    fn state_dim(&self) -> usize {
        self.len()
    }

    fn input_dim(&self) -> usize {
        self.len()
    }

    fn phi(&self, t: f64, x: &[f64], u: &InputSignal) -> Result<Vec<f64>> {
        let mut last = x.to_vec();
        let blow = self.simulate_with(x, u, t, 1e12, |_, _, y| last.copy_from_slice(y))?;
        match blow {
            Some(b) => Err(Error::BlowUp {
                time: b.time,
                component: self.window.indices()[b.component],
                detail: format!("state {}", b.value),
            }),
            None => Ok(last),
        }
    }

    fn local_error(&self, x: &[f64], u: &[f64]) -> f64 {
        match self.domain {
            TimeDomain::Discrete => 0.0,
            TimeDomain::Continuous { dt } => local_error_estimate(x, dt, &mut |y: &[f64], dy: &mut [f64]| self.field(y, u, dy)),
        }
    }
}

/// Simulate `net` on window `q` from `x0`.
pub fn simulate(
    net: &NetworkSpec,
    q: &Window,
    x0: &[f64],
    u: &InputSignal,
    horizon: f64,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    net.compile(q)?.simulate(x0, u, horizon, cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub sizes: Vec<usize>,
}

impl TruncationPolicy {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes[0] == 0 || sizes.windows(2).any(|w| w[1] <= w[0]) {
            return contract("window sizes must be positive and strictly increasing");
        }
        Ok(TruncationPolicy { sizes })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub sizes: Vec<usize>,
    pub times: Vec<f64>,
    /// `norms[s][k]`: network sup norm for size `sizes[s]` at `times[k]`.
    pub norms: Vec<Vec<f64>>,
    /// `drift[s][k] = |norms[s+1][k] - norms[s][k]|`.
    pub drift: Vec<Vec<f64>>,
    pub max_drift: Vec<f64>,
}

/// Simulate the first `n` indices for each `n` in the policy, in parallel,
/// with initial state `x0(i)` and a scalar input broadcast to all components.
pub fn truncation_sweep(
    net: &NetworkSpec,
    policy: &TruncationPolicy,
    x0: &(dyn Fn(usize) -> f64 + Sync),
    u: &InputSignal,
    horizon: f64,
    cfg: &SimConfig,
) -> Result<SweepReport> {
    if u.dim() != 1 {
        return contract("sweeps take a scalar input broadcast to every component");
    }
    let runs: Vec<Trajectory> = policy
        .sizes
        .par_iter()
        .map(|&n| {
            let w = net.index_set.window(n)?;
            if w.len() != n {
                return contract(format!("index set has fewer than {n} indices"));
            }
            let init: Vec<f64> = w.indices().iter().map(|&i| x0(i)).collect();
            let tr = simulate(net, &w, &init, u, horizon, cfg)?;
            if let Some(b) = &tr.blow_up {
                return Err(Error::BlowUp {
                    time: b.time,
                    component: w.indices()[b.component],
                    detail: format!("window size {n}"),
                });
            }
            Ok(tr)
        })
        .collect::<Result<_>>()?;
    let times = runs[0].times.clone();
    let norms: Vec<Vec<f64>> = runs.into_iter().map(|t| t.norms).collect();
    let drift: Vec<Vec<f64>> = norms
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (b - a).abs()).collect())
        .collect();
    let max_drift = drift.iter().map(|d: &Vec<f64>| d.iter().copied().fold(0.0, f64::max)).collect();
    Ok(SweepReport { sizes: policy.sizes.clone(), times, norms, drift, max_drift })
}

/// The network restricted to `q`: subsystems outside `q` are removed and
/// their influence on `q` is replaced by zero.
pub fn subnetwork(net: &NetworkSpec, q: &Window) -> Result<NetworkSpec> {
    net.validate()?;
    if let Some(&i) = q.indices().iter().find(|&&i| !net.index_set.contains(i)) {
        return contract(format!("index {i} is not in the network"));
    }
    if net.index_set.full_window().as_ref() == Some(q) {
        return Ok(net.clone());
    }
    let subsystems = q
        .indices()
        .iter()
        .map(|&i| {
            Ok(IndexedSubsystem { i, spec: net.subsystem(i)?.restrict_neighbors(|j| q.contains(j))? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NetworkSpec {
        time_domain: net.time_domain,
        index_set: IndexSet::Subset { indices: q.indices().to_vec() },
        subsystems: SubsystemRule::List { subsystems },
        gain_graph: net.gain_graph.as_ref().map(|g| g.restrict(q)).transpose()?,
        defaults: NetworkDefaults { window: Some(q.len()), ..net.defaults.clone() },
    })
}
