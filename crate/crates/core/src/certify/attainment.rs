use serde::{Deserialize, Serialize};

use super::ensemble::{run_members, sample_cells, Cell, EnsembleConfig};
use crate::comparison::ScalarCurve;
use crate::error::{contract, Result};
use crate::network::CompiledNetwork;
use crate::systems::grid_time;

/// `ε_n = 2^{-n} σ(r)` for `n = 0..=depth`.
pub fn dyadic_levels(sigma: &ScalarCurve, r: f64, depth: usize) -> Vec<f64> {
    let s = sigma.at(r);
    (0..=depth).map(|n| s * 0.5f64.powi(n as i32)).collect()
}

/// Attainment times `τ_i(ε, r)`: `tau[j][n][p]` is the earliest grid time
/// after which component `labels[p]` stays below `levels[j][n] + γ̂(‖u‖)`
/// for every member sampled at radius `radii[j]` or smaller. `None` means
/// the level is not attained within the horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttainmentTable {
    pub labels: Vec<usize>,
    pub radii: Vec<f64>,
    pub levels: Vec<Vec<f64>>,
    pub tau: Vec<Vec<Vec<Option<f64>>>>,
    pub gamma_hat: ScalarCurve,
    pub horizon: f64,
    /// Grid resolution: `dt`, or 1 in discrete time.
    pub step: f64,
    pub members: usize,
}

impl AttainmentTable {
    pub fn get(&self, j: usize, n: usize, p: usize) -> Option<f64> {
        self.tau[j][n][p]
    }
}

/// Per-member, per-component index of the last grid sample violating each
/// threshold. Thresholds are sorted ascending so a sample violates a prefix.
struct Violations {
    gain: f64,
    last: Vec<Vec<Option<usize>>>,
}

/// Estimate attainment times on `net`.
///
/// Radius `radii[j]` is sampled with `‖x0‖ = radii[j]`, `‖u‖ ≤ radii[j]`,
/// and every member drawn for a smaller radius also counts at `radii[j]`.
pub fn estimate_attainment_times(
    net: &CompiledNetwork,
    radii: &[f64],
    levels: &[Vec<f64>],
    gamma_hat: &ScalarCurve,
    cfg: &EnsembleConfig,
    horizon: f64,
    job: u64,
    stream: u64,
) -> Result<AttainmentTable> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] < 0.0 {
        return contract("attainment radii must be nonnegative and strictly increasing");
    }
    if levels.len() != radii.len() || levels.iter().any(|l| l.is_empty() || l.iter().any(|e| !(*e >= 0.0))) {
        return contract("need a nonempty list of nonnegative levels per radius");
    }
    if !gamma_hat.class().is_k() {
        return contract("the reference gain must be of class K");
    }
    let cells: Vec<Cell> = radii.iter().map(|&r| Cell::new(r, 0.0, r)).collect::<Result<_>>()?;
    let step = net.time_domain().step();
    let members = sample_cells(job, stream, &cells, net.len(), cfg, step, horizon)?;
    if members.is_empty() {
        return contract("attainment ensemble is empty");
    }
    let mut thresholds: Vec<f64> = levels.iter().flatten().copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let n = net.len();
    let k_end = net.steps(horizon);
    let runs = run_members(
        net,
        &members,
        horizon,
        cfg.blowup_bound,
        |m| Violations { gain: gamma_hat.at(m.u_norm), last: vec![vec![None; thresholds.len()]; n] },
        |v, k, _, x| {
            for (p, xp) in x.iter().enumerate() {
                let d = xp.abs() - v.gain;
                for (l, &eps) in thresholds.iter().enumerate() {
                    if d <= eps {
                        break;
                    }
                    v.last[p][l] = Some(k);
                }
            }
        },
    )?;
    let time_of = |last: Option<usize>| -> Option<f64> {
        match last {
            None => Some(0.0),
            Some(k) if k >= k_end => None,
            Some(k) => Some(match net.time_domain().is_discrete() {
                true => (k + 1) as f64,
                false => grid_time(k + 1, k_end, step, horizon),
            }),
        }
    };
    let tau = (0..radii.len())
        .map(|j| {
            levels[j]
                .iter()
                .map(|eps| {
                    let l = thresholds.binary_search_by(|t| t.total_cmp(eps)).expect("level is a threshold");
                    (0..n)
                        .map(|p| {
                            members.iter().zip(&runs).filter(|((c, _), _)| *c <= j).try_fold(0.0f64, |acc, (_, v)| {
                                time_of(v.last[p][l]).map(|t| acc.max(t))
                            })
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(AttainmentTable {
        labels: net.window().indices().to_vec(),
        radii: radii.to_vec(),
        levels: levels.to_vec(),
        tau,
        gamma_hat: gamma_hat.clone(),
        horizon,
        step,
        members: members.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn counterexample_times_follow_closed_form() {
        let e = catalog::from_ref("catalog:counterexample-chain?dt=0.01").unwrap();
        let q = e.spec.window(Some(4)).unwrap();
        let net = e.spec.compile(&q).unwrap();
        let levels = vec![vec![1.0, 0.5, 0.25, 0.125]];
        let cfg = EnsembleConfig { members: 3, ..Default::default() };
        let tab = estimate_attainment_times(&net, &[1.0], &levels, &ScalarCurve::identity(), &cfg, 20.0, 5, 3).unwrap();
        for (p, &i) in q.indices().iter().enumerate() {
            assert_eq!(tab.get(0, 0, p), Some(0.0));
            for n in 1..4 {
                let want = i as f64 * (2.0f64.powi(n as i32)).ln();
                let got = tab.get(0, n, p).unwrap();
                assert!((got - want).abs() <= 0.011, "i={i} n={n}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn unreached_level_is_none() {
        let e = catalog::from_ref("catalog:counterexample-chain?dt=0.1").unwrap();
        let q = e.spec.window(Some(2)).unwrap();
        let net = e.spec.compile(&q).unwrap();
        let cfg = EnsembleConfig { members: 2, ..Default::default() };
        let tab = estimate_attainment_times(&net, &[1.0], &[vec![1e-6]], &ScalarCurve::identity(), &cfg, 1.0, 0, 3).unwrap();
        assert_eq!(tab.get(0, 0, 1), None);
    }
}
