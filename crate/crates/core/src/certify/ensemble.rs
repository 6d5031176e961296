use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::network::CompiledNetwork;
use crate::seed;
use crate::systems::InputSignal;

/// How trajectories are sampled for a ball of initial states and inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    /// Members per (state radius, input range) cell. Members 0 and 1 of
    /// every cell start with all states at `+r` and hold the input constant
    /// at the top and the bottom of its range; the rest are random.
    pub members: usize,
    /// Pieces per random input signal.
    pub input_pieces: usize,
    pub blowup_bound: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig { members: 6, input_pieces: 3, blowup_bound: 1e12 }
    }
}

/// One sampled initial state and input.
#[derive(Clone, Debug, PartialEq)]
pub struct Member {
    /// Seed of the member's generator; reproduces it exactly.
    pub seed: u64,
    pub x0: Vec<f64>,
    pub u: InputSignal,
    pub x_norm: f64,
    pub u_norm: f64,
}

/// A cell of the sampling grid: `‖x0‖ = x_radius` and `‖u‖ ∈ [u_lo, u_hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub x_radius: f64,
    pub u_lo: f64,
    pub u_hi: f64,
}

impl Cell {
    pub fn new(x_radius: f64, u_lo: f64, u_hi: f64) -> Result<Self> {
        if !(x_radius >= 0.0 && x_radius.is_finite() && u_lo >= 0.0 && u_hi >= u_lo && u_hi.is_finite()) {
            return contract(format!("invalid sampling cell ({x_radius}, [{u_lo}, {u_hi}])"));
        }
        Ok(Cell { x_radius, u_lo, u_hi })
    }
}

fn pin_norm(rng: &mut ChaCha8Rng, v: &mut [f64], r: f64) {
    if r > 0.0 && !v.is_empty() {
        let k = rng.random_range(0..v.len());
        v[k] = if rng.random::<bool>() { r } else { -r };
    }
}

/// Draw member `m` of `cell` for an `n`-component window. Input breaks sit
/// half a grid step off the grid.
pub fn sample_member(seed: u64, m: usize, cell: &Cell, n: usize, cfg: &EnsembleConfig, step: f64, horizon: f64) -> Result<Member> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Cell { x_radius: r, u_lo, u_hi } = *cell;
    let (x0, u) = if m < 2 {
        (vec![r; n], InputSignal::constant(vec![if m == 0 { u_hi } else { u_lo }; n])?)
    } else {
        let mut x0: Vec<f64> = (0..n).map(|_| r * rng.random_range(-1.0..=1.0)).collect();
        pin_norm(&mut rng, &mut x0, r);
        let level = if u_hi > u_lo { rng.random_range(u_lo..=u_hi) } else { u_hi };
        let slots = (horizon / step).floor().max(1.0) as usize;
        let mut starts: Vec<usize> = (1..cfg.input_pieces.max(1)).map(|_| rng.random_range(0..slots)).collect();
        starts.sort_unstable();
        starts.dedup();
        let mut breaks = vec![0.0];
        breaks.extend(starts.iter().map(|&j| (j as f64 + 0.5) * step));
        let mut values: Vec<Vec<f64>> = breaks
            .iter()
            .map(|_| (0..n).map(|_| level * rng.random_range(-1.0..=1.0)).collect())
            .collect();
        let piece = rng.random_range(0..values.len());
        pin_norm(&mut rng, &mut values[piece], level);
        (x0, InputSignal::new(breaks, values, None)?)
    };
    let x_norm = x0.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let u_norm = u.norm();
    Ok(Member { seed, x0, u, x_norm, u_norm })
}

/// Members of every cell, seeded from `(job, stream, cell << 32 | m)`.
pub fn sample_cells(
    job: u64,
    stream: u64,
    cells: &[Cell],
    n: usize,
    cfg: &EnsembleConfig,
    step: f64,
    horizon: f64,
) -> Result<Vec<(usize, Member)>> {
    if cfg.members == 0 {
        return contract("ensemble needs at least one member per cell");
    }
    let mut out = Vec::with_capacity(cells.len() * cfg.members);
    for (c, cell) in cells.iter().enumerate() {
        for m in 0..cfg.members {
            let s = seed::derive(job, stream, ((c as u64) << 32) | m as u64);
            out.push((c, sample_member(s, m, cell, n, cfg, step, horizon)?));
        }
    }
    Ok(out)
}

/// Simulate every member in parallel, folding each trajectory into a state
/// built by `init` and updated by `observe(state, k, t, x)`. Blow-up is a
/// certification failure naming the member seed.
pub fn run_members<S: Send>(
    net: &CompiledNetwork,
    members: &[(usize, Member)],
    horizon: f64,
    bound: f64,
    init: impl Fn(&Member) -> S + Sync,
    observe: impl Fn(&mut S, usize, f64, &[f64]) + Sync,
) -> Result<Vec<S>> {
    members
        .par_iter()
        .map(|(_, m)| {
            let mut state = init(m);
            let blow = net.simulate_with(&m.x0, &m.u, horizon, bound, |k, t, x| observe(&mut state, k, t, x))?;
            match blow {
                Some(b) => Err(Error::Certification(format!(
                    "BIC diagnostic: trajectory unbounded at t = {} in component {} (member seed {})",
                    b.time,
                    net.window().indices()[b.component],
                    m.seed
                ))),
                None => Ok(state),
            }
        })
        .collect()
}
