//! Sparse gain graphs and the semimaximum gain operator
//! `Γ(s)_i = sup_j γ_ij(s_j)`.
//!
//! Infinite index sets are described by a generator rule; every computation
//! happens on a finite [`Window`] with an implicit zero tail. Because rows are
//! finite, applying the operator on a window is exact for vectors supported
//! in the window.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comparison::ScalarCurve;
use crate::error::{contract, Error, Result};

const PAR_ROWS: usize = 2048;

/// Index set of a network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum IndexSet {
    /// `{0, .., n-1}`
    Finite { n: usize },
    /// An explicit finite set of labels (arises from restriction).
    Subset { indices: Vec<usize> },
    /// A countable set `{start, start+1, ..}` with rows given by a named rule.
    Generator {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
}

impl IndexSet {
    pub fn is_finite(&self) -> bool {
        !matches!(self, IndexSet::Generator { .. })
    }

    pub fn contains(&self, i: usize) -> bool {
        match self {
            IndexSet::Finite { n } => i < *n,
            IndexSet::Subset { indices } => indices.binary_search(&i).is_ok(),
            IndexSet::Generator { params, .. } => i >= param_start(params),
        }
    }

    /// The first `n` indices of the set (all of them for smaller finite sets).
    pub fn window(&self, n: usize) -> Result<Window> {
        match self {
            IndexSet::Finite { n: m } => Window::range(0, n.min(*m)),
            IndexSet::Subset { indices } => Window::new(indices.iter().copied().take(n).collect()),
            IndexSet::Generator { params, .. } => Window::range(param_start(params), n),
        }
    }

    /// Every index, for finite sets.
    pub fn full_window(&self) -> Option<Window> {
        match self {
            IndexSet::Finite { n } => Window::range(0, *n).ok(),
            IndexSet::Subset { indices } => Window::new(indices.clone()).ok(),
            IndexSet::Generator { .. } => None,
        }
    }
}

fn param_start(params: &BTreeMap<String, f64>) -> usize {
    params.get("start").copied().unwrap_or(0.0) as usize
}

/// Sorted, duplicate-free, nonempty list of indices; the working index set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Window {
    indices: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Window {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Window::new(v)
    }
}

impl From<Window> for Vec<usize> {
    fn from(w: Window) -> Self {
        w.indices
    }
}

impl Window {
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return contract("working index set must be nonempty");
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(Window { indices })
    }

    pub fn range(start: usize, len: usize) -> Result<Self> {
        Window::new((start..start + len).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn position(&self, i: usize) -> Option<usize> {
        self.indices.binary_search(&i).ok()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.position(i).is_some()
    }

    pub fn is_subset_of(&self, other: &Window) -> bool {
        self.indices.iter().all(|&i| other.contains(i))
    }
}

/// Element of the nonnegative cone, stored densely over a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonnegSequence {
    values: Vec<f64>,
}

impl NonnegSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return contract(format!("sequence entry {k} is {v}; entries must be finite and nonnegative"));
        }
        Ok(NonnegSequence { values })
    }

    pub fn zeros(n: usize) -> Self {
        NonnegSequence { values: vec![0.0; n] }
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sup norm.
    pub fn norm(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &NonnegSequence) -> bool {
        self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }
}

/// Named row rules for generator index sets.
#[derive(Clone, Debug, PartialEq)]
enum Rule {
    /// No internal gains.
    Empty { external: f64 },
    /// `γ_{i,i+1} = theta · id`
    Chain { theta: f64, external: f64 },
    /// `γ_{i,i-1} = left · id`, `γ_{i,i+1} = right · id`
    BiChain { left: f64, right: f64, external: f64 },
}

impl Rule {
    fn from_params(name: &str, params: &BTreeMap<String, f64>) -> Result<Rule> {
        let get = |k: &str, default: f64| -> Result<f64> {
            let v = params.get(k).copied().unwrap_or(default);
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                contract(format!("generator parameter {k} must be finite and nonnegative"))
            }
        };
        let external = get("external", 1.0)?;
        match name {
            "empty" => Ok(Rule::Empty { external }),
            "chain" => Ok(Rule::Chain { theta: get("theta", 0.5)?, external }),
            "bichain" => Ok(Rule::BiChain { left: get("left", 0.5)?, right: get("right", 0.5)?, external }),
            other => Err(Error::Parse(format!("unknown gain generator '{other}'"))),
        }
    }

    fn row(&self, i: usize, start: usize) -> Vec<(usize, ScalarCurve)> {
        let lin = |a: f64| ScalarCurve::linear(a).expect("validated");
        let mut row = Vec::new();
        match *self {
            Rule::Empty { .. } => {}
            Rule::Chain { theta, .. } => {
                if theta > 0.0 {
                    row.push((i + 1, lin(theta)));
                }
            }
            Rule::BiChain { left, right, .. } => {
                if left > 0.0 && i > start {
                    row.push((i - 1, lin(left)));
                }
                if right > 0.0 {
                    row.push((i + 1, lin(right)));
                }
            }
        }
        row
    }

    fn external(&self) -> f64 {
        match *self {
            Rule::Empty { external } | Rule::Chain { external, .. } | Rule::BiChain { external, .. } => external,
        }
    }

    fn sup_slope(&self) -> f64 {
        match *self {
            Rule::Empty { .. } => 0.0,
            Rule::Chain { theta, .. } => theta,
            Rule::BiChain { left, right, .. } => left.max(right),
        }
    }

    fn max_row_len(&self) -> usize {
        match self {
            Rule::Empty { .. } => 0,
            Rule::Chain { .. } => 1,
            Rule::BiChain { .. } => 2,
        }
    }
}

/// Sparse table of internal gains `γ_ij` (row-major by `i`) and external
/// gains `γ_i`. Absent entries are zero gains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct GainGraph {
    index_set: IndexSet,
    rows: BTreeMap<usize, Vec<(usize, ScalarCurve)>>,
    external: BTreeMap<usize, ScalarCurve>,
    rule: Option<Rule>,
}

impl GainGraph {
    /// Finite graph on `{0, .., n-1}` from `(i, j, γ_ij)` edges.
    pub fn finite(n: usize, edges: Vec<(usize, usize, ScalarCurve)>, external: Vec<(usize, ScalarCurve)>) -> Result<Self> {
        Self::explicit(IndexSet::Finite { n }, edges, external)
    }

    pub fn explicit(
        index_set: IndexSet,
        edges: Vec<(usize, usize, ScalarCurve)>,
        external: Vec<(usize, ScalarCurve)>,
    ) -> Result<Self> {
        if !index_set.is_finite() {
            return contract("explicit edges need a finite index set");
        }
        if let IndexSet::Subset { indices } = &index_set {
            if indices.windows(2).any(|w| w[1] <= w[0]) {
                return contract("subset indices must be sorted and unique");
            }
        }
        let mut rows: BTreeMap<usize, Vec<(usize, ScalarCurve)>> = BTreeMap::new();
        for (i, j, g) in edges {
            if i == j {
                return contract(format!("gain graph has a diagonal entry ({i}, {i})"));
            }
            if !index_set.contains(i) || !index_set.contains(j) {
                return contract(format!("edge ({i}, {j}) leaves the index set"));
            }
            if !g.class().is_k() {
                return contract(format!("gain ({i}, {j}) is not of class K"));
            }
            if g.is_zero() {
                continue;
            }
            let row = rows.entry(i).or_default();
            if row.iter().any(|(k, _)| *k == j) {
                return contract(format!("duplicate edge ({i}, {j})"));
            }
            row.push((j, g));
        }
        for row in rows.values_mut() {
            row.sort_by_key(|(j, _)| *j);
        }
        let mut ext = BTreeMap::new();
        for (i, g) in external {
            if !index_set.contains(i) {
                return contract(format!("external gain for {i} outside the index set"));
            }
            if !g.class().is_k() {
                return contract(format!("external gain {i} is not of class K"));
            }
            ext.insert(i, g);
        }
        Ok(GainGraph { index_set, rows, external: ext, rule: None })
    }

    /// Graph over `{start, start+1, ..}` defined by a named rule:
    /// `empty`, `chain` (`theta`) or `bichain` (`left`, `right`); all take
    /// `external` (slope of the common external gain) and `start`.
    pub fn generator(name: &str, params: BTreeMap<String, f64>) -> Result<Self> {
        let rule = Rule::from_params(name, &params)?;
        Ok(GainGraph {
            index_set: IndexSet::Generator { name: name.to_string(), params },
            rows: BTreeMap::new(),
            external: BTreeMap::new(),
            rule: Some(rule),
        })
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index_set
    }

    fn start(&self) -> usize {
        match &self.index_set {
            IndexSet::Generator { params, .. } => param_start(params),
            _ => 0,
        }
    }

    /// Nonzero entries `(j, γ_ij)` of row `i`.
    pub fn row(&self, i: usize) -> Vec<(usize, ScalarCurve)> {
        match &self.rule {
            Some(rule) if self.index_set.contains(i) => rule.row(i, self.start()),
            Some(_) => Vec::new(),
            None => self.rows.get(&i).cloned().unwrap_or_default(),
        }
    }

    pub fn gain(&self, i: usize, j: usize) -> ScalarCurve {
        self.row(i)
            .into_iter()
            .find(|(k, _)| *k == j)
            .map(|(_, g)| g)
            .unwrap_or_else(ScalarCurve::zero)
    }

    pub fn external_gain(&self, i: usize) -> ScalarCurve {
        match &self.rule {
            Some(rule) => ScalarCurve::linear(rule.external()).expect("validated"),
            None => self.external.get(&i).cloned().unwrap_or_else(ScalarCurve::zero),
        }
    }

    /// Explicit edges `(i, j, γ_ij)` among the indices of `window`.
    pub fn edges_within(&self, window: &Window) -> Vec<(usize, usize, ScalarCurve)> {
        window
            .indices()
            .iter()
            .flat_map(|&i| {
                self.row(i)
                    .into_iter()
                    .filter(|(j, _)| window.contains(*j))
                    .map(move |(j, g)| (i, j, g))
            })
            .collect()
    }

    /// `(γ_i(level))_{i ∈ window}`.
    pub fn external_vector(&self, window: &Window, level: f64) -> Vec<f64> {
        window.indices().iter().map(|&i| self.external_gain(i).at(level)).collect()
    }

    /// A single K curve dominating every external gain: closed form for
    /// generator graphs, the exact pointwise maximum for finite ones.
    pub fn uniform_external_bound(&self) -> Result<ScalarCurve> {
        match &self.rule {
            Some(rule) => ScalarCurve::linear(rule.external()),
            None => {
                let all: Vec<ScalarCurve> = self.external.values().cloned().collect();
                if all.is_empty() {
                    Ok(ScalarCurve::zero())
                } else {
                    ScalarCurve::max(&all)
                }
            }
        }
    }

    /// Compile the operator on a working window.
    pub fn operator(&self, window: &Window) -> GainOperator {
        let rows = window
            .indices()
            .iter()
            .map(|&i| {
                self.row(i)
                    .into_iter()
                    .filter_map(|(j, g)| window.position(j).map(|p| (p, g)))
                    .collect()
            })
            .collect();
        GainOperator { rows }
    }

    /// Graph with rows and columns outside `q` deleted.
    pub fn restrict(&self, q: &Window) -> Result<GainGraph> {
        if let Some(&i) = q.indices().iter().find(|&&i| !self.index_set.contains(i)) {
            return contract(format!("index {i} is not in the index set"));
        }
        if self.index_set.full_window().as_ref() == Some(q) {
            return Ok(self.clone());
        }
        let external = q.indices().iter().map(|&i| (i, self.external_gain(i))).collect();
        GainGraph::explicit(
            IndexSet::Subset { indices: q.indices().to_vec() },
            self.edges_within(q),
            external,
        )
    }

    /// Same index set, with every gain touching an index outside `q` set to zero.
    pub fn zero_extend(&self, q: &Window) -> Result<GainGraph> {
        let full = self
            .index_set
            .full_window()
            .ok_or_else(|| Error::Contract("zero extension needs a finite index set".into()))?;
        let edges = self
            .edges_within(&full)
            .into_iter()
            .filter(|(i, j, _)| q.contains(*i) && q.contains(*j))
            .collect();
        let external = full.indices().iter().map(|&i| (i, self.external_gain(i))).collect();
        GainGraph::explicit(self.index_set.clone(), edges, external)
    }

    /// Graph with every internal gain replaced by `f(i, j, γ_ij)`.
    pub fn map_gains(&self, window: &Window, mut f: impl FnMut(usize, usize, &ScalarCurve) -> ScalarCurve) -> Result<GainGraph> {
        let edges = self.edges_within(window).into_iter().map(|(i, j, g)| {
            let g2 = f(i, j, &g);
            (i, j, g2)
        });
        let external = window.indices().iter().map(|&i| (i, self.external_gain(i))).collect();
        let set = match self.index_set.full_window() {
            Some(full) if &full == window => self.index_set.clone(),
            _ => IndexSet::Subset { indices: window.indices().to_vec() },
        };
        GainGraph::explicit(set, edges.collect(), external)
    }

    /// Assumption-1 and row-finiteness check on a radius grid.
    pub fn check_assumption1(&self, radii: &[f64]) -> Assumption1Report {
        match &self.rule {
            Some(rule) => Assumption1Report {
                radii: radii.to_vec(),
                sup_gain: radii.iter().map(|r| rule.sup_slope() * r).collect(),
                scope: CheckScope::ClosedForm,
                row_finite: true,
                max_row_len: rule.max_row_len(),
            },
            None => {
                let sup_gain = radii
                    .iter()
                    .map(|&r| {
                        self.rows
                            .values()
                            .flatten()
                            .map(|(_, g)| g.at(r))
                            .fold(0.0, f64::max)
                    })
                    .collect();
                Assumption1Report {
                    radii: radii.to_vec(),
                    sup_gain,
                    scope: CheckScope::Exhaustive,
                    row_finite: true,
                    max_row_len: self.rows.values().map(Vec::len).max().unwrap_or(0),
                }
            }
        }
    }

    /// Coupling slope of a `chain` generator graph.
    pub fn chain_theta(&self) -> Option<f64> {
        match self.rule {
            Some(Rule::Chain { theta, .. }) => Some(theta),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckScope {
    /// Every stored entry of a finite graph was inspected.
    Exhaustive,
    /// Evaluated from the generator's closed form over the whole infinite set.
    ClosedForm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assumption1Report {
    pub radii: Vec<f64>,
    pub sup_gain: Vec<f64>,
    pub scope: CheckScope,
    pub row_finite: bool,
    pub max_row_len: usize,
}

impl Assumption1Report {
    pub fn holds(&self) -> bool {
        self.row_finite && self.sup_gain.iter().all(|v| v.is_finite())
    }
}

/// The gain operator compiled on a window: row `p` lists `(column position, γ)`.
#[derive(Clone, Debug)]
pub struct GainOperator {
    rows: Vec<Vec<(usize, ScalarCurve)>>,
}

impl GainOperator {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<(usize, ScalarCurve)>] {
        &self.rows
    }

    fn row_value(row: &[(usize, ScalarCurve)], s: &[f64]) -> f64 {
        row.iter().map(|(p, g)| g.at(s[*p])).fold(0.0, f64::max)
    }

    /// `Γ(s)` on raw values; `s` must be nonnegative and of window length.
    pub fn apply_raw(&self, s: &[f64]) -> Vec<f64> {
        debug_assert_eq!(s.len(), self.rows.len());
        if self.rows.len() >= PAR_ROWS {
            self.rows.par_iter().map(|row| Self::row_value(row, s)).collect()
        } else {
            self.rows.iter().map(|row| Self::row_value(row, s)).collect()
        }
    }

    pub fn apply(&self, s: &NonnegSequence) -> Result<NonnegSequence> {
        if s.len() != self.rows.len() {
            return contract(format!("sequence has length {}, window has {}", s.len(), self.rows.len()));
        }
        Ok(NonnegSequence { values: self.apply_raw(s.values()) })
    }

    pub fn iterate(&self, s: &NonnegSequence, n: usize) -> Result<NonnegSequence> {
        let mut cur = s.clone();
        for _ in 0..n {
            cur = self.apply(&cur)?;
        }
        Ok(cur)
    }
}

/// `Γ(s)` on the window `q`.
pub fn apply(graph: &GainGraph, q: &Window, s: &NonnegSequence) -> Result<NonnegSequence> {
    graph.operator(q).apply(s)
}

/// `Γ^n(s)` on the window `q`.
pub fn iterate(graph: &GainGraph, q: &Window, s: &NonnegSequence, n: usize) -> Result<NonnegSequence> {
    graph.operator(q).iterate(s, n)
}

// ---------------------------------------------------------------- JSON

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeJson {
    pub i: usize,
    pub j: usize,
    pub gain: ScalarCurve,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExternalJson {
    pub i: usize,
    pub gain: ScalarCurve,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphJson {
    pub index_set: IndexSet,
    #[serde(default)]
    pub edges: Vec<EdgeJson>,
    #[serde(default)]
    pub external: Vec<ExternalJson>,
}

impl From<GainGraph> for GraphJson {
    fn from(g: GainGraph) -> Self {
        let edges = g
            .rows
            .iter()
            .flat_map(|(&i, row)| row.iter().map(move |(j, gain)| EdgeJson { i, j: *j, gain: gain.clone() }))
            .collect();
        let external = g
            .external
            .iter()
            .map(|(&i, gain)| ExternalJson { i, gain: gain.clone() })
            .collect();
        GraphJson { index_set: g.index_set, edges, external }
    }
}

impl TryFrom<GraphJson> for GainGraph {
    type Error = Error;
    fn try_from(j: GraphJson) -> Result<Self> {
        match j.index_set {
            IndexSet::Generator { name, params } => {
                if !j.edges.is_empty() || !j.external.is_empty() {
                    return Err(Error::Parse("generator graphs take their edges from the rule".into()));
                }
                GainGraph::generator(&name, params)
            }
            set => GainGraph::explicit(
                set,
                j.edges.into_iter().map(|e| (e.i, e.j, e.gain)).collect(),
                j.external.into_iter().map(|e| (e.i, e.gain)).collect(),
            ),
        }
    }
}

/// `a · id`; panics on a negative or non-finite slope.
pub fn linear_gain(a: f64) -> ScalarCurve {
    ScalarCurve::linear(a).expect("nonnegative slope")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cycle(a: f64, b: f64) -> GainGraph {
        GainGraph::finite(2, vec![(0, 1, linear_gain(a)), (1, 0, linear_gain(b))], vec![]).unwrap()
    }

    fn seq(v: &[f64]) -> NonnegSequence {
        NonnegSequence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn apply_examples() {
        let g = two_cycle(0.5, 0.5);
        let w = Window::range(0, 2).unwrap();
        assert_eq!(apply(&g, &w, &seq(&[1.0, 2.0])).unwrap().values(), &[1.0, 0.5]);
        assert_eq!(apply(&g, &w, &seq(&[0.0, 0.0])).unwrap().values(), &[0.0, 0.0]);

        let chain = GainGraph::generator("chain", BTreeMap::from([("theta".to_string(), 0.5)])).unwrap();
        let q = Window::range(0, 3).unwrap();
        assert_eq!(apply(&chain, &q, &seq(&[0.0, 0.0, 4.0])).unwrap().values(), &[0.0, 2.0, 0.0]);
        assert!(NonnegSequence::new(vec![1.0, -0.1]).is_err());
    }

    #[test]
    fn iterate_examples() {
        let g = two_cycle(0.5, 0.5);
        let w = Window::range(0, 2).unwrap();
        let s = seq(&[1.0, 1.0]);
        assert_eq!(iterate(&g, &w, &s, 0).unwrap(), s);
        assert_eq!(iterate(&g, &w, &s, 3).unwrap().values(), &[0.125, 0.125]);
        assert_eq!(iterate(&g, &w, &seq(&[0.0, 0.0]), 7).unwrap().values(), &[0.0, 0.0]);
    }

    #[test]
    fn restrict_examples() {
        let cyc = GainGraph::finite(
            3,
            vec![(0, 1, linear_gain(0.5)), (1, 2, linear_gain(0.5)), (2, 0, linear_gain(0.5))],
            vec![],
        )
        .unwrap();
        let q = Window::new(vec![0, 1]).unwrap();
        let r = cyc.restrict(&q).unwrap();
        assert_eq!(r.edges_within(&q).len(), 1);
        assert_eq!(r.gain(0, 1).linear_slope(), Some(0.5));
        assert!(r.gain(1, 2).is_zero());

        let full = Window::range(0, 3).unwrap();
        assert_eq!(cyc.restrict(&full).unwrap(), cyc);

        let chain = GainGraph::finite(3, vec![(0, 1, linear_gain(0.5)), (1, 2, linear_gain(0.5))], vec![]).unwrap();
        let single = Window::new(vec![1]).unwrap();
        let r = chain.restrict(&single).unwrap();
        assert!(r.row(1).is_empty());
        assert_eq!(apply(&r, &single, &seq(&[3.0])).unwrap().values(), &[0.0]);
        assert!(Window::new(vec![]).is_err());
    }

    #[test]
    fn rejects_diagonal_and_foreign_edges() {
        assert!(GainGraph::finite(2, vec![(0, 0, linear_gain(0.5))], vec![]).is_err());
        assert!(GainGraph::finite(2, vec![(0, 5, linear_gain(0.5))], vec![]).is_err());
    }

    #[test]
    fn assumption1_scope() {
        let chain = GainGraph::generator("chain", BTreeMap::from([("theta".to_string(), 0.25)])).unwrap();
        let rep = chain.check_assumption1(&[1.0, 2.0]);
        assert_eq!(rep.scope, CheckScope::ClosedForm);
        assert_eq!(rep.sup_gain, vec![0.25, 0.5]);
        let g = two_cycle(0.5, 2.0);
        let rep = g.check_assumption1(&[1.0]);
        assert_eq!(rep.scope, CheckScope::Exhaustive);
        assert_eq!(rep.sup_gain, vec![2.0]);
        assert!(rep.holds());
    }

    #[test]
    fn json_roundtrip_shape() {
        let g = GainGraph::finite(2, vec![(0, 1, linear_gain(0.5))], vec![(0, linear_gain(1.0))]).unwrap();
        let v = serde_json::to_value(&g).unwrap();
        assert_eq!(v["index_set"], serde_json::json!({"kind": "finite", "n": 2}));
        assert_eq!(v["edges"][0]["j"], 1);
        let back: GainGraph = serde_json::from_value(v).unwrap();
        assert_eq!(back, g);
        let gen: GainGraph = serde_json::from_str(
            r#"{"index_set": {"kind": "generator", "name": "chain", "params": {"theta": 0.5}}}"#,
        )
        .unwrap();
        assert_eq!(gen.chain_theta(), Some(0.5));
    }
}
