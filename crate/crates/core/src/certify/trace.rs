use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ensemble::{run_members, sample_cells, Cell, EnsembleConfig};
use crate::comparison::ScalarCurve;
use crate::error::{contract, Result};
use crate::gains::{GainGraph, Window};
use crate::network::CompiledNetwork;

/// Smallest relative band width the sampler resolves.
pub const BAND_RESOLUTION: f64 = 1e-12;

/// Input range of a band ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Band {
    /// `‖u‖ ∈ [2^{-k} r, 2^{1-k} r]`.
    Dyadic { k: u32 },
    /// `‖u‖ ≤ q`.
    Small { q: f64 },
}

impl Band {
    /// `(lower, upper)` input norms for radius `r`.
    pub fn range(&self, r: f64) -> Result<(f64, f64)> {
        match *self {
            Band::Dyadic { k } => {
                let lo = r * 0.5f64.powi(k as i32);
                if !(lo > r * BAND_RESOLUTION) {
                    return contract(format!("band k = {k} at r = {r} is below the sampler resolution"));
                }
                Ok((lo, 2.0 * lo))
            }
            Band::Small { q } => {
                if !(q >= 0.0 && q.is_finite()) {
                    return contract(format!("small-input cap must be finite and nonnegative, got {q}"));
                }
                Ok((0.0, q))
            }
        }
    }

    /// Input level fed to the gains: `2^{1-k} r` or `q`.
    pub fn level(&self, r: f64) -> Result<f64> {
        Ok(self.range(r)?.1)
    }
}

/// Finite-horizon band limsups for one `(r, band)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandEntry {
    pub r: f64,
    pub band: Band,
    pub level: f64,
    pub tail_starts: Vec<f64>,
    /// `y[j][p] = sup over members of sup_{s ∈ [tail_starts[j], H]} |x_p(s)|`.
    pub y: Vec<Vec<f64>>,
    pub members: usize,
}

impl BandEntry {
    /// Estimate at the largest tail start.
    pub fn y_hat(&self) -> &[f64] {
        self.y.last().expect("at least one tail start")
    }

    /// Every component is nonincreasing in the tail start.
    pub fn tails_nonincreasing(&self) -> bool {
        self.y.windows(2).all(|w| w[1].iter().zip(&w[0]).all(|(b, a)| b <= a))
    }

    /// Largest drop `y[j] − y[j+1]` over components, per consecutive pair.
    pub fn tail_decay(&self) -> Vec<f64> {
        self.y
            .windows(2)
            .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| a - b).fold(0.0, f64::max))
            .collect()
    }
}

fn valid_tails(tail_starts: &[f64], horizon: f64) -> Result<()> {
    if tail_starts.is_empty()
        || tail_starts.windows(2).any(|w| w[1] <= w[0])
        || tail_starts[0] < 0.0
        || *tail_starts.last().unwrap() >= horizon
    {
        return contract("tail starts must be nonempty, increasing and below the horizon");
    }
    Ok(())
}

/// Sample `‖x0‖ = r` and inputs in `band`, and record per-component tail sups.
pub fn compute_band_limsups(
    net: &CompiledNetwork,
    r: f64,
    band: Band,
    cfg: &EnsembleConfig,
    horizon: f64,
    tail_starts: &[f64],
    job: u64,
    stream: u64,
) -> Result<BandEntry> {
    valid_tails(tail_starts, horizon)?;
    let (lo, hi) = band.range(r)?;
    let cell = Cell::new(r, lo, hi)?;
    let members = sample_cells(job, stream, &[cell], net.len(), cfg, net.time_domain().step(), horizon)?;
    let n = net.len();
    let eps = 1e-9 * net.time_domain().step();
    let runs = run_members(net, &members, horizon, cfg.blowup_bound, |_| vec![vec![0.0f64; n]; tail_starts.len()], |y, _, t, x| {
        for (j, &ts) in tail_starts.iter().enumerate() {
            if t + eps < ts {
                break;
            }
            for (yp, xp) in y[j].iter_mut().zip(x) {
                *yp = yp.max(xp.abs());
            }
        }
    })?;
    let mut y = vec![vec![0.0f64; n]; tail_starts.len()];
    for run in runs {
        for (acc, part) in y.iter_mut().zip(run) {
            for (a, b) in acc.iter_mut().zip(part) {
                *a = a.max(b);
            }
        }
    }
    Ok(BandEntry { r, band, level: hi, tail_starts: tail_starts.to_vec(), y, members: members.len() })
}

/// Outcome of checking `ŷ ≤ Γ(ŷ) + γ⃗(level)` and `‖ŷ‖ ≤ ξ(γ(level))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgCheck {
    pub r: f64,
    pub band: Band,
    pub level: f64,
    /// `min_i (Γ(ŷ)_i + γ_i(level) − ŷ_i)`.
    pub inequality_margin: f64,
    pub worst_component: Option<usize>,
    pub y_norm: f64,
    pub norm_bound: f64,
    /// `ξ(γ(level)) − ‖ŷ‖`.
    pub norm_margin: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Check the small-gain inequality and its MBI conclusion on one band entry.
/// `gamma` is the common external gain; it defaults to the graph's
/// uniform external bound.
pub fn verify_sg_inequality(
    entry: &BandEntry,
    graph: &GainGraph,
    window: &Window,
    xi: &ScalarCurve,
    gamma: Option<&ScalarCurve>,
    tol: f64,
) -> Result<SgCheck> {
    let y = entry.y_hat();
    if y.len() != window.len() {
        return contract("trace and gain graph are over different windows");
    }
    let gy = graph.operator(window).apply_raw(y);
    let ext = graph.external_vector(window, entry.level);
    let mut margin = f64::INFINITY;
    let mut worst = None;
    for p in 0..y.len() {
        let m = gy[p] + ext[p] - y[p];
        if m < margin {
            margin = m;
            worst = Some(window.indices()[p]);
        }
    }
    let common = match gamma {
        Some(g) => g.clone(),
        None => graph.uniform_external_bound()?,
    };
    let y_norm = y.iter().fold(0.0f64, |a, v| a.max(*v));
    let norm_bound = xi.at(common.at(entry.level));
    let norm_margin = norm_bound - y_norm;
    let passed = margin >= -tol && norm_margin >= -tol;
    Ok(SgCheck {
        r: entry.r,
        band: entry.band,
        level: entry.level,
        inequality_margin: margin,
        worst_component: worst,
        y_norm,
        norm_bound,
        norm_margin,
        tol,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProofTrace {
    pub labels: Vec<usize>,
    pub entries: Vec<BandEntry>,
    pub checks: Vec<SgCheck>,
}

impl ProofTrace {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Rows `r,k,i,tail_start,y_hat`; `k` is empty for small-input entries.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "r,k,i,tail_start,y_hat")?;
        for e in &self.entries {
            let k = match e.band {
                Band::Dyadic { k } => k.to_string(),
                Band::Small { .. } => String::new(),
            };
            for (ts, row) in e.tail_starts.iter().zip(&e.y) {
                for (i, v) in self.labels.iter().zip(row) {
                    writeln!(out, "{:.16e},{k},{i},{ts:.16e},{v:.16e}", e.r)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gains::linear_gain;

    fn entry(y: Vec<f64>, level: f64) -> BandEntry {
        BandEntry { r: 1.0, band: Band::Dyadic { k: 1 }, level, tail_starts: vec![0.0], y: vec![y], members: 1 }
    }

    #[test]
    fn zero_trace_passes() {
        let g = GainGraph::finite(2, vec![(0, 1, linear_gain(0.5))], vec![]).unwrap();
        let w = Window::range(0, 2).unwrap();
        let c = verify_sg_inequality(&entry(vec![0.0, 0.0], 1.0), &g, &w, &ScalarCurve::identity(), None, 0.0).unwrap();
        assert!(c.passed);
    }

    #[test]
    fn cycle_gain_two_fails() {
        // a 2·id cycle admits large ŷ that no ξ bounds
        let g = GainGraph::finite(2, vec![(0, 1, linear_gain(2.0)), (1, 0, linear_gain(2.0))], vec![
            (0, linear_gain(1.0)),
            (1, linear_gain(1.0)),
        ])
        .unwrap();
        let w = Window::range(0, 2).unwrap();
        let c = verify_sg_inequality(&entry(vec![10.0, 10.0], 1.0), &g, &w, &linear_gain(2.0), None, 1e-6).unwrap();
        assert!(c.inequality_margin > 0.0);
        assert!(!c.passed);
    }

    #[test]
    fn band_ranges() {
        assert_eq!(Band::Dyadic { k: 1 }.range(2.0).unwrap(), (1.0, 2.0));
        assert!(Band::Dyadic { k: 60 }.range(1.0).is_err());
        assert_eq!(Band::Small { q: 0.0 }.level(1.0).unwrap(), 0.0);
    }
}
