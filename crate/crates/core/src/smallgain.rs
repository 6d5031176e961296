//! Numerical checkers for the uniform small-gain condition, the monotone
//! bounded invertibility (MBI) property and a cycle screen for finite graphs.
//!
//! Sampled results are evidence, not proofs; every report says which kind of
//! evidence it carries.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comparison::{ClassGrid, CurveClass, Repr, ScalarCurve};
use crate::error::{contract, Error, Result};
use crate::gains::{GainGraph, GainOperator, Window};
use crate::seed::{self, stream};

/// Witness acceptance margin for MBI violations.
pub const MBI_TOL: f64 = 1e-9;

/// Sup-norm distance of `v` to the nonnegative cone: `sup_i max(-v_i, 0)`.
pub fn dist_to_cone(v: &[f64]) -> f64 {
    v.iter().map(|x| (-x).max(0.0)).fold(0.0, f64::max)
}

/// `dist(Γ(x) - x, cone) = sup_i (x_i - Γ(x)_i)^+`.
pub fn deficit(op: &GainOperator, x: &[f64]) -> f64 {
    let gx = op.apply_raw(x);
    let diff: Vec<f64> = gx.iter().zip(x).map(|(g, xi)| g - xi).collect();
    dist_to_cone(&diff)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    /// Closed-form computation for a linear-gain special case.
    Exact,
    /// Minimum over a finite random sample.
    Sampled,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub samples_per_radius: usize,
    /// Use the closed forms for two-node linear graphs and chain windows.
    pub exact_when_available: bool,
    /// Local-search steps applied to the best sample at each radius.
    pub polish_steps: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { samples_per_radius: 3000, exact_when_available: true, polish_steps: 400 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgcWitness {
    pub radius: f64,
    pub x: Vec<f64>,
    pub deficit: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SGCReport {
    pub radii: Vec<f64>,
    /// Smallest deficit found at each radius.
    pub deficits: Vec<f64>,
    /// Nondecreasing piecewise-linear minorant of `deficits`, anchored at 0.
    pub eta_hat: ScalarCurve,
    /// Minimizing vector per radius.
    pub witnesses: Vec<SgcWitness>,
    pub holds: bool,
    pub evidence: Evidence,
    pub budget: usize,
    pub seed: u64,
}

impl SGCReport {
    fn from_witnesses(witnesses: Vec<SgcWitness>, evidence: Evidence, budget: usize, seed: u64) -> Result<Self> {
        let radii: Vec<f64> = witnesses.iter().map(|w| w.radius).collect();
        let deficits: Vec<f64> = witnesses.iter().map(|w| w.deficit).collect();
        let eta_hat = eta_minorant(&radii, &deficits)?;
        let holds = deficits.iter().zip(&radii).all(|(d, r)| *d > 1e-12 * r);
        Ok(SGCReport { radii, deficits, eta_hat, witnesses, holds, evidence, budget, seed })
    }

    /// Candidate `ξ` from the report. Sampled deficits only pin `η` at the
    /// grid radii, so for nondecreasing `η` the deficit seen at `r_k` is
    /// credited to `r_{k+1}` before inverting. Exact reports come from linear
    /// gains, where `η` is linear and is inverted directly.
    pub fn xi_candidate(&self) -> Result<ScalarCurve> {
        let m = self.radii.len();
        if self.evidence == Evidence::Exact || m < 2 {
            return derive_xi_from_eta(&self.eta_hat);
        }
        let mut vals = self.deficits.clone();
        for k in (0..m - 1).rev() {
            vals[k] = vals[k].min(vals[k + 1]);
        }
        if vals[0] <= 0.0 {
            return derive_xi_from_eta(&self.eta_hat);
        }
        let mut pts = vec![(0.0, 0.0)];
        pts.extend((0..m - 1).map(|k| (self.radii[k + 1], vals[k])));
        pts.push((self.radii[m - 1] * self.radii[m - 1] / self.radii[m - 2], vals[m - 1]));
        invert_points(&pts)
    }

    /// Add an observed deficit (for instance from an MBI witness `v`, whose
    /// deficit is `‖((id - Γ)v)^+‖`) and rebuild `eta_hat`.
    pub fn absorb(&mut self, x: Vec<f64>, deficit: f64) -> Result<()> {
        let radius = x.iter().copied().fold(0.0, f64::max);
        if radius <= 0.0 {
            return Ok(());
        }
        let w = SgcWitness { radius, x, deficit };
        match self.radii.iter().position(|&r| r == radius) {
            Some(k) if self.deficits[k] <= deficit => return Ok(()),
            Some(k) => self.witnesses[k] = w,
            None => {
                let k = self.radii.partition_point(|&r| r < radius);
                self.witnesses.insert(k, w);
            }
        }
        self.evidence = Evidence::Sampled;
        let refreshed = Self::from_witnesses(std::mem::take(&mut self.witnesses), self.evidence, self.budget, self.seed)?;
        *self = refreshed;
        Ok(())
    }
}

fn eta_minorant(radii: &[f64], deficits: &[f64]) -> Result<ScalarCurve> {
    let mut vals = deficits.to_vec();
    for k in (0..vals.len().saturating_sub(1)).rev() {
        vals[k] = vals[k].min(vals[k + 1]);
    }
    let mut pts = vec![(0.0, 0.0)];
    pts.extend(radii.iter().copied().zip(vals));
    let strict = pts.windows(2).all(|w| w[1].1 > w[0].1);
    let class = if strict { CurveClass::KInf } else { CurveClass::Mono };
    ScalarCurve::pwl(pts, class)
}

fn linear_slopes(graph: &GainGraph, window: &Window) -> Option<Vec<(usize, usize, f64)>> {
    graph
        .edges_within(window)
        .into_iter()
        .map(|(i, j, g)| g.linear_slope().map(|a| (i, j, a)))
        .collect()
}

/// Exact minimizer for two nodes with linear gains `a = γ_01`, `b = γ_10`.
fn exact_two_node(a: f64, b: f64, r: f64) -> (Vec<f64>, f64) {
    // on the face x_0 = r the deficit is max((r - a y)^+, (y - b r)^+), y = x_1
    let face = |a: f64, b: f64| -> (f64, f64) {
        let f = |y: f64| (r - a * y).max(0.0).max((y - b * r).max(0.0));
        let mut cands = vec![0.0, r, (b * r).min(r), r * (1.0 + b) / (1.0 + a)];
        if a > 0.0 {
            cands.push((r / a).min(r));
        }
        cands
            .into_iter()
            .map(|y| y.clamp(0.0, r))
            .map(|y| (y, f(y)))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap()
    };
    let (y0, d0) = face(a, b);
    let (y1, d1) = face(b, a);
    if d0 <= d1 {
        (vec![r, y0], d0)
    } else {
        (vec![y1, r], d1)
    }
}

/// Exact minimizer on a contiguous chain window of length `n`:
/// `η(r) = r (1 - θ) / (1 - θ^n)`, attained by a geometric profile.
fn exact_chain(theta: f64, n: usize, r: f64) -> (Vec<f64>, f64) {
    let partial = |m: usize| -> f64 {
        if theta == 1.0 {
            m as f64
        } else {
            (1.0 - theta.powi(m as i32)) / (1.0 - theta)
        }
    };
    let d = r / partial(n);
    let x = (0..n).map(|p| if p == 0 { r } else { d * partial(n - p) }).collect();
    (x, d)
}

fn is_contiguous(window: &Window) -> bool {
    let idx = window.indices();
    idx.last().unwrap() - idx[0] + 1 == idx.len()
}

fn sample_profile(rng: &mut ChaCha8Rng, n: usize, kind: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    match kind {
        0 => {
            let m = rng.random_range(1..=n.min(3));
            for _ in 0..m {
                let p = rng.random_range(0..n);
                x[p] = rng.random::<f64>();
            }
            let p = rng.random_range(0..n);
            x[p] = 1.0;
        }
        1 => {
            let delta = rng.random::<f64>() * 0.5;
            for xi in x.iter_mut() {
                *xi = 1.0 - delta * rng.random::<f64>();
            }
        }
        3 => {
            // uniform on a random support, i.e. a sample of a restriction
            for xi in x.iter_mut() {
                if rng.random::<bool>() {
                    *xi = rng.random::<f64>();
                }
            }
        }
        _ => {
            for xi in x.iter_mut() {
                *xi = rng.random::<f64>();
            }
        }
    }
    let m = x.iter().copied().fold(0.0, f64::max);
    if m > 0.0 {
        x.iter_mut().for_each(|v| *v /= m);
    } else {
        x[0] = 1.0;
    }
    x
}

/// Approximate least solution of `v = Γ(v) + c·1` by monotone iteration from 0.
fn fixed_point_profile(op: &GainOperator, c: f64) -> Vec<f64> {
    let n = op.len();
    let mut v = vec![0.0; n];
    for _ in 0..(10 * n).max(10_000) {
        let next: Vec<f64> = op.apply_raw(&v).into_iter().map(|g| g + c).collect();
        let done = next.iter().zip(&v).all(|(a, b)| (a - b).abs() <= 1e-14 * a.abs().max(1.0));
        v = next;
        if done || !v.iter().all(|x| x.is_finite() && *x < 1e300) {
            break;
        }
    }
    v
}

/// Randomized coordinate search from `x`, keeping `‖x‖ = r`: one coordinate
/// at a time is rescaled (or zeroed) and the move kept if the deficit drops.
fn polish(op: &GainOperator, mut x: Vec<f64>, mut d: f64, r: f64, steps: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
    let n = x.len();
    let mut spread = 0.5f64;
    for _ in 0..steps {
        let p = rng.random_range(0..n);
        let mut y = x.clone();
        y[p] = if rng.random_range(0..8) == 0 {
            0.0
        } else {
            let base = if y[p] > 0.0 { y[p] } else { r * rng.random::<f64>() };
            base * (spread * rng.random_range(-1.0f64..1.0)).exp()
        };
        let m = y.iter().copied().fold(0.0, f64::max);
        if !(m > 0.0) {
            continue;
        }
        y.iter_mut().for_each(|v| *v *= r / m);
        let dy = deficit(op, &y);
        if dy < d {
            x = y;
            d = dy;
        } else {
            spread = (spread * 0.98).max(1e-3);
        }
    }
    (x, d)
}

/// Each radius tries the best vector of every other radius, rescaled to its
/// own norm, and polishes the winner again. Two sweeps.
fn share_across_radii(op: &GainOperator, mut best: Vec<SgcWitness>, steps: usize, budget: usize, job_seed: u64) -> Vec<SgcWitness> {
    let m = best.len();
    for sweep in 1..=2u64 {
        let prev = best.clone();
        best = prev
            .par_iter()
            .enumerate()
            .map(|(k, w)| {
                let r = w.radius;
                let mut cur = w.clone();
                for o in prev.iter().filter(|o| o.radius != r) {
                    let x: Vec<f64> = o.x.iter().map(|v| v * r / o.radius).collect();
                    let d = deficit(op, &x);
                    if d < cur.deficit {
                        cur = SgcWitness { radius: r, x, deficit: d };
                    }
                }
                if cur.deficit > 0.0 {
                    let mut rng = seed::rng(job_seed, stream::SGC, (m * budget + sweep as usize * m + k) as u64);
                    let (x, d) = polish(op, cur.x.clone(), cur.deficit, r, steps, &mut rng);
                    cur = SgcWitness { radius: r, x, deficit: d };
                }
                cur
            })
            .collect();
    }
    best
}

/// Estimate `η(r) = inf_{‖x‖ = r} dist(Γ(x) - x, cone)` on a radius grid.
///
/// Besides the random samples (a quarter each of vertex-type, constant plus
/// noise, uniform, and uniform on a random support, all rescaled) every
/// radius tries the constant vector and the rescaled least fixed point of
/// `v = Γ(v) + 1`, which is the exact minimizer for linear gains. The best
/// vector per radius is then polished by a seeded local search, and the
/// polished vectors are shared between radii.
pub fn estimate_uniform_sgc(
    graph: &GainGraph,
    window: &Window,
    radii: &[f64],
    cfg: &SamplerConfig,
    job_seed: u64,
) -> Result<SGCReport> {
    let mut radii: Vec<f64> = radii.iter().copied().filter(|r| *r > 0.0).collect();
    if radii.is_empty() {
        return contract("radius grid has no positive radius");
    }
    if cfg.samples_per_radius == 0 {
        return contract("sampler budget must be at least one vector per radius");
    }
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let n = window.len();
    let op = graph.operator(window);

    if cfg.exact_when_available {
        if let Some(slopes) = linear_slopes(graph, window) {
            let exact: Option<Box<dyn Fn(f64) -> (Vec<f64>, f64)>> = if slopes.is_empty() {
                Some(Box::new(|r: f64| {
                    let mut x = vec![0.0; n];
                    x[0] = r;
                    (x, r)
                }))
            } else if n == 2 {
                let get = |i: usize, j: usize| slopes.iter().find(|e| e.0 == i && e.1 == j).map_or(0.0, |e| e.2);
                let (i0, i1) = (window.indices()[0], window.indices()[1]);
                let (a, b) = (get(i0, i1), get(i1, i0));
                Some(Box::new(move |r| exact_two_node(a, b, r)))
            } else if let (Some(theta), true) = (graph.chain_theta(), is_contiguous(window)) {
                Some(Box::new(move |r| exact_chain(theta, n, r)))
            } else {
                None
            };
            if let Some(f) = exact {
                let witnesses = radii
                    .iter()
                    .map(|&r| {
                        let (x, _) = f(r);
                        let d = deficit(&op, &x);
                        SgcWitness { radius: r, x, deficit: d }
                    })
                    .collect();
                return SGCReport::from_witnesses(witnesses, Evidence::Exact, 0, job_seed);
            }
        }
    }

    let unit_fp = {
        let v = fixed_point_profile(&op, 1.0);
        let m = v.iter().copied().fold(0.0, f64::max);
        if m.is_finite() && m > 0.0 {
            Some(v.into_iter().map(|x| x / m).collect::<Vec<f64>>())
        } else {
            None
        }
    };
    let budget = cfg.samples_per_radius;
    let witnesses = radii
        .par_iter()
        .enumerate()
        .map(|(k, &r)| {
            let mut best = SgcWitness { radius: r, x: vec![r; n], deficit: deficit(&op, &vec![r; n]) };
            if let Some(u) = &unit_fp {
                let x: Vec<f64> = u.iter().map(|v| v * r).collect();
                let d = deficit(&op, &x);
                if d < best.deficit {
                    best = SgcWitness { radius: r, x, deficit: d };
                }
            }
            let sampled = (0..budget)
                .into_par_iter()
                .map(|s| {
                    let mut rng = seed::rng(job_seed, stream::SGC, (k * budget + s) as u64);
                    let x: Vec<f64> = sample_profile(&mut rng, n, s % 4).into_iter().map(|v| v * r).collect();
                    (deficit(&op, &x), s, x)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if let Some((d, _, x)) = sampled {
                if d < best.deficit {
                    best = SgcWitness { radius: r, x, deficit: d };
                }
            }
            if cfg.polish_steps > 0 && best.deficit > 0.0 {
                let mut rng = seed::rng(job_seed, stream::SGC, (radii.len() * budget + k) as u64);
                let (x, d) = polish(&op, best.x.clone(), best.deficit, r, cfg.polish_steps, &mut rng);
                best = SgcWitness { radius: r, x, deficit: d };
            }
            best
        })
        .collect();
    let witnesses = if cfg.polish_steps > 0 { share_across_radii(&op, witnesses, cfg.polish_steps, budget, job_seed) } else { witnesses };
    SGCReport::from_witnesses(witnesses, Evidence::Sampled, budget * radii.len(), job_seed)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct MbiConfig {
    pub budget: usize,
    /// Sample norms are drawn log-uniformly from `[scale/100, 100 scale]`.
    pub scale: f64,
    pub tol: f64,
}

impl Default for MbiConfig {
    fn default() -> Self {
        MbiConfig { budget: 10_000, scale: 1.0, tol: MBI_TOL }
    }
}

/// A pair `(v, w)` with `(id - Γ)(v) <= w` and `‖v‖ > ξ(‖w‖)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MBIWitness {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub norm_v: f64,
    pub norm_w: f64,
    pub xi_at_w: f64,
    pub sample_index: usize,
    pub seed: u64,
}

impl MBIWitness {
    /// Recompute `w`, the norms and the violation from `v`; true iff all
    /// stored numbers are reproduced bit for bit and the violation stands.
    pub fn revalidate(&self, graph: &GainGraph, window: &Window, xi: &ScalarCurve, tol: f64) -> bool {
        let op = graph.operator(window);
        let w = minimal_w(&op, &self.v);
        let norm_v = self.v.iter().copied().fold(0.0, f64::max);
        let norm_w = w.iter().copied().fold(0.0, f64::max);
        let xi_w = xi.at(norm_w);
        let admissible = self
            .v
            .iter()
            .zip(op.apply_raw(&self.v))
            .zip(&self.w)
            .all(|((v, g), w)| v - g <= *w);
        w == self.w
            && norm_v == self.norm_v
            && norm_w == self.norm_w
            && xi_w == self.xi_at_w
            && admissible
            && norm_v > xi_w + tol
    }
}

/// `((id - Γ)(v))^+`, the least admissible `w` for a given `v`.
pub fn minimal_w(op: &GainOperator, v: &[f64]) -> Vec<f64> {
    op.apply_raw(v).iter().zip(v).map(|(g, x)| (x - g).max(0.0)).collect()
}

fn mbi_sample(op: &GainOperator, rng: &mut ChaCha8Rng, kind: usize, scale: f64) -> Vec<f64> {
    let n = op.len();
    let norm = scale * (rng.random_range(-2.0f64..2.0) * std::f64::consts::LN_10).exp();
    let mut v = match kind {
        0 => sample_profile(rng, n, 2),
        1 => sample_profile(rng, n, 0),
        2 => sample_profile(rng, n, 1),
        _ => {
            // iterate v <- Γ(v) + w0 from a sparse or constant seed vector
            let seed_kind = if rng.random::<bool>() { 0 } else { 1 };
            let w0 = sample_profile(rng, n, seed_kind);
            let steps = rng.random_range(1..=(2 * n).clamp(4, 200));
            let mut v = w0.clone();
            for _ in 0..steps {
                v = op.apply_raw(&v).iter().zip(&w0).map(|(g, w)| g + w).collect();
                if !v.iter().all(|x| x.is_finite()) {
                    break;
                }
            }
            let m = v.iter().copied().fold(0.0, f64::max);
            if m.is_finite() && m > 0.0 {
                v.iter_mut().for_each(|x| *x /= m);
                v
            } else {
                w0
            }
        }
    };
    v.iter_mut().for_each(|x| *x *= norm);
    v
}

/// Search for a violation of `(id - Γ)(v) <= w ⇒ ‖v‖ <= ξ(‖w‖)`.
///
/// Each sample uses the least admissible `w`. Sample `s` is drawn from its
/// own derived generator, so the returned witness (the lowest violating
/// index) does not depend on thread count.
pub fn falsify_mbi(
    graph: &GainGraph,
    window: &Window,
    xi: &ScalarCurve,
    cfg: &MbiConfig,
    job_seed: u64,
) -> Result<Option<MBIWitness>> {
    if xi.class() != CurveClass::KInf {
        return contract(format!("candidate ξ must be of class K-infinity, got {:?}", xi.class()));
    }
    if !(cfg.scale > 0.0 && cfg.scale.is_finite()) {
        return contract("MBI sample scale must be positive");
    }
    let op = graph.operator(window);
    let found = (0..cfg.budget).into_par_iter().find_first(|&s| {
        let mut rng = seed::rng(job_seed, stream::MBI, s as u64);
        let v = mbi_sample(&op, &mut rng, s % 5, cfg.scale);
        let w = minimal_w(&op, &v);
        let nv = v.iter().copied().fold(0.0, f64::max);
        let nw = w.iter().copied().fold(0.0, f64::max);
        nv > xi.at(nw) + cfg.tol
    });
    Ok(found.map(|s| {
        let mut rng = seed::rng(job_seed, stream::MBI, s as u64);
        let v = mbi_sample(&op, &mut rng, s % 5, cfg.scale);
        let w = minimal_w(&op, &v);
        let norm_v = v.iter().copied().fold(0.0, f64::max);
        let norm_w = w.iter().copied().fold(0.0, f64::max);
        MBIWitness { xi_at_w: xi.at(norm_w), v, w, norm_v, norm_w, sample_index: s, seed: job_seed }
    }))
}

/// Candidate `ξ = η̂^{-1}`.
pub fn derive_xi_from_eta(eta: &ScalarCurve) -> Result<ScalarCurve> {
    if eta.is_zero() {
        return Err(Error::NotInvertible("η̂ is identically zero: uniform small-gain condition not established".into()));
    }
    match eta.repr() {
        Repr::Linear { a } => ScalarCurve::linear(1.0 / a),
        Repr::Power { a, p } => ScalarCurve::power(a.powf(-1.0 / p), 1.0 / p),
        Repr::Pwl(pts) => invert_points(pts),
        _ => {
            if !eta.is_unbounded() {
                return Err(Error::NotInvertible("η̂ is bounded, its inverse is not K-infinity".into()));
            }
            let grid = ClassGrid { lo: 1e-6, hi: 1e6, per_decade: 64, l_floor: 0.0 };
            let pts: Vec<(f64, f64)> = grid.points().into_iter().map(|r| (r, eta.at(r))).collect();
            invert_points(&pts)
        }
    }
}

fn invert_points(pts: &[(f64, f64)]) -> Result<ScalarCurve> {
    if pts.windows(2).any(|w| w[1].1 < w[0].1) {
        return contract("η̂ must be nondecreasing to be inverted");
    }
    if let Some(&(r, _)) = pts.iter().find(|(r, v)| *r > 0.0 && *v <= 0.0) {
        return Err(Error::NotInvertible(format!(
            "η̂ vanishes at r = {r}: uniform small-gain condition not established"
        )));
    }
    let mut inv: Vec<(f64, f64)> = Vec::with_capacity(pts.len() + 1);
    if pts[0].0 > 0.0 {
        inv.push((0.0, 0.0));
    }
    for &(r, v) in pts {
        match inv.last_mut() {
            Some(last) if last.0 == v => last.1 = last.1.max(r),
            _ => inv.push((v, r)),
        }
    }
    if inv.len() < 2 {
        return Err(Error::NotInvertible("η̂ has a single breakpoint".into()));
    }
    ScalarCurve::pwl(inv, CurveClass::KInf)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct CycleConfig {
    /// Required relative gap: the cycle composition must stay below `(1 - margin) r`.
    pub margin: f64,
    pub max_cycles: usize,
}

impl Default for CycleConfig {
    fn default() -> Self {
        CycleConfig { margin: 1e-6, max_cycles: 100_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffendingCycle {
    /// `i_0 → i_1 → … → i_0`, listed without repeating `i_0`.
    pub nodes: Vec<usize>,
    pub composition: ScalarCurve,
    pub radius: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub passed: bool,
    pub offending: Option<OffendingCycle>,
    pub cycles_checked: usize,
    /// The cycle cap was hit; the verdict covers only the cycles enumerated.
    pub truncated: bool,
}

/// Check `γ_{i0 i1} ∘ γ_{i1 i2} ∘ … ∘ γ_{ik i0} < id` on `radii` for every
/// simple cycle of the graph restricted to `window`.
pub fn finite_cycle_check(graph: &GainGraph, window: &Window, radii: &[f64], cfg: &CycleConfig) -> Result<CycleReport> {
    let n = window.len();
    let adj: Vec<Vec<(usize, ScalarCurve)>> = graph.operator(window).rows().to_vec();
    let mut report = CycleReport { passed: true, offending: None, cycles_checked: 0, truncated: false };

    // enumerate each simple cycle once, from its smallest position
    for start in 0..n {
        let mut path = vec![start];
        let mut on_path = vec![false; n];
        on_path[start] = true;
        let mut stack: Vec<usize> = vec![0];
        while let Some(next_edge) = stack.last_mut() {
            let u = *path.last().unwrap();
            if *next_edge >= adj[u].len() {
                stack.pop();
                on_path[u] = false;
                path.pop();
                continue;
            }
            let (v, _) = adj[u][*next_edge];
            *next_edge += 1;
            if v == start {
                report.cycles_checked += 1;
                if let Some(off) = check_cycle(&adj, &path, window, radii, cfg.margin)? {
                    report.passed = false;
                    report.offending = Some(off);
                    return Ok(report);
                }
                if report.cycles_checked >= cfg.max_cycles {
                    report.truncated = true;
                    return Ok(report);
                }
            } else if v > start && !on_path[v] {
                on_path[v] = true;
                path.push(v);
                stack.push(0);
            }
        }
    }
    Ok(report)
}

fn check_cycle(
    adj: &[Vec<(usize, ScalarCurve)>],
    path: &[usize],
    window: &Window,
    radii: &[f64],
    margin: f64,
) -> Result<Option<OffendingCycle>> {
    let edge = |a: usize, b: usize| adj[a].iter().find(|(j, _)| *j == b).map(|(_, g)| g.clone()).unwrap();
    let k = path.len();
    let gains: Vec<ScalarCurve> = (0..k).map(|m| edge(path[m], path[(m + 1) % k])).collect();
    let mut comp = gains[k - 1].clone();
    for g in gains[..k - 1].iter().rev() {
        comp = g.compose(&comp)?;
    }
    for &r in radii.iter().filter(|r| **r > 0.0) {
        let value = comp.at(r);
        if !(value < r * (1.0 - margin)) {
            return Ok(Some(OffendingCycle {
                nodes: path.iter().map(|&p| window.indices()[p]).collect(),
                composition: comp,
                radius: r,
                value,
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gains::linear_gain;

    fn two_cycle(a: f64, b: f64) -> GainGraph {
        GainGraph::finite(2, vec![(0, 1, linear_gain(a)), (1, 0, linear_gain(b))], vec![]).unwrap()
    }

    fn w2() -> Window {
        Window::range(0, 2).unwrap()
    }

    fn sampled(n: usize) -> SamplerConfig {
        SamplerConfig { samples_per_radius: n, exact_when_available: false, polish_steps: 0 }
    }

    #[test]
    fn cone_distance_examples() {
        assert_eq!(dist_to_cone(&[-0.3, 0.5]), 0.3);
        assert_eq!(dist_to_cone(&[0.0, 0.5]), 0.0);
        assert_eq!(dist_to_cone(&[-1.0, -2.0]), 2.0);
    }

    #[test]
    fn sgc_two_cycle() {
        let g = two_cycle(0.5, 0.5);
        let exact = estimate_uniform_sgc(&g, &w2(), &[1.0], &SamplerConfig::default(), 1).unwrap();
        assert_eq!(exact.evidence, Evidence::Exact);
        assert!((exact.deficits[0] - 0.5).abs() < 1e-15);
        let s = estimate_uniform_sgc(&g, &w2(), &[0.5, 1.0, 2.0], &sampled(500), 1).unwrap();
        assert_eq!(s.evidence, Evidence::Sampled);
        assert!((s.eta_hat.at(1.0) - 0.5).abs() <= 0.025);
        assert!(s.holds);
        for w in &s.witnesses {
            assert_eq!(deficit(&g.operator(&w2()), &w.x), w.deficit);
        }
    }

    #[test]
    fn sgc_violated_and_empty() {
        let g = two_cycle(2.0, 1.0);
        for cfg in [SamplerConfig::default(), sampled(100)] {
            let rep = estimate_uniform_sgc(&g, &w2(), &[1.0], &cfg, 3).unwrap();
            assert_eq!(rep.deficits[0], 0.0);
            assert!(!rep.holds);
        }
        let empty = GainGraph::finite(3, vec![], vec![]).unwrap();
        let w = Window::range(0, 3).unwrap();
        for cfg in [SamplerConfig::default(), sampled(50)] {
            let rep = estimate_uniform_sgc(&empty, &w, &[0.5, 2.0], &cfg, 3).unwrap();
            assert_eq!(rep.deficits, vec![0.5, 2.0]);
        }
        assert!(estimate_uniform_sgc(&empty, &w, &[0.0], &sampled(5), 1).is_err());
    }

    #[test]
    fn exact_two_node_matches_grid_search() {
        for (a, b) in [(0.5, 0.5), (0.3, 0.9), (0.0, 0.7), (1.5, 0.2)] {
            let (_, d) = exact_two_node(a, b, 1.0);
            let f = |x0: f64, x1: f64| (x0 - a * x1).max(0.0).max((x1 - b * x0).max(0.0));
            let grid = (0..=20_000).map(|k| k as f64 / 20_000.0);
            let best = grid.flat_map(|y| [f(1.0, y), f(y, 1.0)]).fold(f64::INFINITY, f64::min);
            assert!((d - best).abs() < 1e-4, "{a} {b}: {d} vs {best}");
        }
    }

    #[test]
    fn exact_chain_matches_sampling_bound() {
        let chain = GainGraph::generator("chain", [("theta".to_string(), 0.5)].into()).unwrap();
        let w = Window::range(0, 4).unwrap();
        let exact = estimate_uniform_sgc(&chain, &w, &[1.0], &SamplerConfig::default(), 0).unwrap();
        assert!((exact.deficits[0] - 0.5 / (1.0 - 0.0625)).abs() < 1e-15);
        let s = estimate_uniform_sgc(&chain, &w, &[1.0], &sampled(2000), 0).unwrap();
        assert!(s.deficits[0] >= exact.deficits[0] - 1e-12);
        assert!(s.deficits[0] <= exact.deficits[0] + 1e-9);
    }

    #[test]
    fn mbi_examples() {
        let g = two_cycle(0.5, 0.5);
        let cfg = MbiConfig { budget: 20_000, ..Default::default() };
        let xi2 = ScalarCurve::linear(2.0).unwrap();
        assert!(falsify_mbi(&g, &w2(), &xi2, &cfg, 9).unwrap().is_none());
        let xi12 = ScalarCurve::linear(1.2).unwrap();
        let wit = falsify_mbi(&g, &w2(), &xi12, &cfg, 9).unwrap().expect("witness");
        assert!(wit.revalidate(&g, &w2(), &xi12, MBI_TOL));
        assert!(!wit.revalidate(&g, &w2(), &xi2, MBI_TOL));
        let empty = GainGraph::finite(2, vec![], vec![]).unwrap();
        assert!(falsify_mbi(&empty, &w2(), &ScalarCurve::identity(), &cfg, 9).unwrap().is_none());
        assert!(falsify_mbi(&g, &w2(), &ScalarCurve::saturating(1.0).unwrap(), &cfg, 9).is_err());
    }

    #[test]
    fn mbi_witness_independent_of_threads() {
        let g = two_cycle(0.5, 0.5);
        let xi = ScalarCurve::linear(1.9).unwrap();
        let cfg = MbiConfig::default();
        let a = falsify_mbi(&g, &w2(), &xi, &cfg, 4).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| falsify_mbi(&g, &w2(), &xi, &cfg, 4).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn xi_derivation() {
        let xi = derive_xi_from_eta(&ScalarCurve::linear(0.5).unwrap()).unwrap();
        assert_eq!(xi.linear_slope(), Some(2.0));
        let xi = derive_xi_from_eta(&ScalarCurve::identity()).unwrap();
        assert_eq!(xi.linear_slope(), Some(1.0));
        let bad = ScalarCurve::pwl(vec![(0.0, 0.0), (1.0, 0.0), (2.0, 1.0)], CurveClass::Mono).unwrap();
        assert!(matches!(derive_xi_from_eta(&bad), Err(Error::NotInvertible(_))));
        let eta = ScalarCurve::pwl(vec![(0.0, 0.0), (1.0, 0.5), (2.0, 1.0)], CurveClass::KInf).unwrap();
        let xi = derive_xi_from_eta(&eta).unwrap();
        assert_eq!(xi.at(0.5), 1.0);
        assert_eq!(xi.at(0.75), 1.5);
        let p = derive_xi_from_eta(&ScalarCurve::power(4.0, 2.0).unwrap()).unwrap();
        assert!((p.at(4.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn absorb_lowers_eta() {
        let g = two_cycle(0.5, 0.5);
        let mut rep = estimate_uniform_sgc(&g, &w2(), &[1.0, 2.0], &sampled(3), 1).unwrap();
        rep.absorb(vec![1.5, 1.5], 0.75).unwrap();
        assert_eq!(rep.radii, vec![1.0, 1.5, 2.0]);
        assert!(rep.eta_hat.at(1.5) <= 0.75);
    }

    #[test]
    fn cycle_examples() {
        let cfg = CycleConfig::default();
        let rep = finite_cycle_check(&two_cycle(0.5, 0.5), &w2(), &[1.0, 10.0], &cfg).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.cycles_checked, 1);
        let rep = finite_cycle_check(&two_cycle(2.0, 1.0), &w2(), &[1.0], &cfg).unwrap();
        assert!(!rep.passed);
        let off = rep.offending.unwrap();
        assert_eq!(off.composition.linear_slope(), Some(2.0));
        assert_eq!(off.nodes, vec![0, 1]);
        let dag = GainGraph::finite(3, vec![(0, 1, linear_gain(5.0)), (1, 2, linear_gain(5.0))], vec![]).unwrap();
        let rep = finite_cycle_check(&dag, &Window::range(0, 3).unwrap(), &[1.0], &cfg).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.cycles_checked, 0);
    }

    #[test]
    fn cycle_enumeration_counts_triangle_both_ways() {
        let e = |i, j| (i, j, linear_gain(0.5));
        let g = GainGraph::finite(3, vec![e(0, 1), e(1, 2), e(2, 0), e(0, 2), e(2, 1), e(1, 0)], vec![]).unwrap();
        let rep = finite_cycle_check(&g, &Window::range(0, 3).unwrap(), &[1.0], &CycleConfig::default()).unwrap();
        // three 2-cycles and two 3-cycles
        assert_eq!(rep.cycles_checked, 5);
    }
}
