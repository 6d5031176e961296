use serde::{Deserialize, Serialize};

use super::curve::{CurveClass, ScalarCurve};
use super::pwl;
use crate::error::{contract, Result};

/// Attainment data for one radius: at time `times[n]` the trajectories of
/// the radius-`r` ball have entered the level `levels[n]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayTable {
    pub radius: f64,
    pub times: Vec<f64>,
    pub levels: Vec<f64>,
}

/// A KL bound sampled on a radius grid.
///
/// Each radius carries a class-L slice in `t`. Between grid radii the slice
/// of the next larger radius is used, capped by `bound(r)`; beyond the last
/// radius only `bound(r)` applies. This keeps the surface nondecreasing in
/// `r`, zero at `r = 0` and dominated by `bound`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KLSurface {
    radii: Vec<f64>,
    slices: Vec<ScalarCurve>,
    bound: ScalarCurve,
    monotone_in_r: bool,
}

impl KLSurface {
    /// Assemble a surface from per-radius slices, checking monotonicity in `r`
    /// and domination by `bound` on the union of slice breakpoints.
    pub fn new(radii: Vec<f64>, slices: Vec<ScalarCurve>, bound: ScalarCurve) -> Result<Self> {
        if radii.len() != slices.len() || radii.is_empty() {
            return contract("KL surface needs one slice per radius");
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
            return contract("KL radii must be positive and strictly increasing");
        }
        if slices.iter().any(|s| s.class() != CurveClass::L || s.points().is_none()) {
            return contract("KL slices must be piecewise-linear class L curves");
        }
        let grid = pwl::merge_abscissae(slices.iter().map(|s| s.points().unwrap()));
        let mut monotone = true;
        for k in 0..slices.len() {
            let cap = bound.at(radii[k]);
            for &t in &grid {
                let v = slices[k].at(t);
                if v > cap {
                    return contract(format!("slice r = {} exceeds its bound at t = {t}: {v} > {cap}", radii[k]));
                }
                // interpolation on different segments may differ by a few ulps
                let prev = if k > 0 { slices[k - 1].at(t) } else { 0.0 };
                if v < prev - 8.0 * f64::EPSILON * prev {
                    monotone = false;
                }
            }
        }
        if !monotone {
            return contract("KL slices must be nondecreasing in r");
        }
        Ok(KLSurface { radii, slices, bound, monotone_in_r: monotone })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn slices(&self) -> &[ScalarCurve] {
        &self.slices
    }

    pub fn bound(&self) -> &ScalarCurve {
        &self.bound
    }

    pub fn is_monotone_in_r(&self) -> bool {
        self.monotone_in_r
    }

    pub fn eval(&self, r: f64, t: f64) -> f64 {
        debug_assert!(r >= 0.0 && t >= 0.0);
        if r == 0.0 {
            return 0.0;
        }
        let cap = self.bound.at(r);
        let k = self.radii.partition_point(|&q| q < r);
        match self.slices.get(k) {
            Some(s) => s.at(t).min(cap),
            None => cap,
        }
    }

    /// Earliest `t` with `eval(r, t) <= level`, if the surface gets there.
    pub fn first_time_below(&self, r: f64, level: f64) -> Option<f64> {
        if self.eval(r, 0.0) <= level {
            return Some(0.0);
        }
        let k = self.radii.partition_point(|&q| q < r);
        let pts = self.slices.get(k)?.points()?;
        for w in pts.windows(2) {
            let ((t0, v0), (t1, v1)) = (w[0], w[1]);
            if v1 <= level {
                if v0 == v1 {
                    return Some(t1);
                }
                return Some(t0 + (t1 - t0) * ((v0 - level) / (v0 - v1)));
            }
        }
        None
    }

    /// Pointwise maximum over surfaces sharing the same radius grid.
    pub fn pointwise_max(surfaces: &[&KLSurface]) -> Result<KLSurface> {
        let first = match surfaces.first() {
            Some(s) => *s,
            None => return contract("maximum over an empty family of KL surfaces"),
        };
        if surfaces.iter().any(|s| s.radii != first.radii) {
            return contract("KL surfaces must share the radius grid");
        }
        let slices = (0..first.radii.len())
            .map(|k| {
                let parts: Vec<&[(f64, f64)]> = surfaces.iter().map(|s| s.slices[k].points().unwrap()).collect();
                ScalarCurve::pwl(pwl::upper_envelope(&parts, true), CurveClass::L)
            })
            .collect::<Result<Vec<_>>>()?;
        let bounds: Vec<ScalarCurve> = surfaces.iter().map(|s| s.bound.clone()).collect();
        KLSurface::new(first.radii.clone(), slices, ScalarCurve::max(&bounds)?)
    }
}

/// Build a KL bound from dyadic attainment data.
///
/// For every radius the staircase `w(r, 0) = 2 ε_0`, `w(r, τ_n) = ε_{n-1}`
/// (with `ε_n = 2^{-n} σ(r)`) is joined linearly, which majorizes the step
/// bound `ε_n` on `(τ_n, τ_{n+1})`, and held flat after the last time. The
/// slices are then replaced by their running maximum over the radius grid.
/// Slices of radius zero are dropped; the surface is zero there by definition.
pub fn kl_from_decay_table(tables: &[DecayTable], sigma_ugs: &ScalarCurve) -> Result<KLSurface> {
    if tables.is_empty() {
        return contract("decay table is empty");
    }
    let mut tables: Vec<&DecayTable> = tables.iter().collect();
    tables.sort_by(|a, b| a.radius.total_cmp(&b.radius));
    if tables.windows(2).any(|w| w[0].radius == w[1].radius) {
        return contract("duplicate radius in decay table");
    }
    let mut radii = Vec::new();
    let mut slices: Vec<ScalarCurve> = Vec::new();
    for tab in tables {
        let r = tab.radius;
        if !(r.is_finite() && r >= 0.0) {
            return contract(format!("invalid radius {r}"));
        }
        if tab.times.is_empty() || tab.times.len() != tab.levels.len() {
            return contract(format!("radius {r}: times and levels must be nonempty and of equal length"));
        }
        if tab.times[0] != 0.0 {
            return contract(format!("radius {r}: first attainment time must be 0"));
        }
        if tab.times.windows(2).any(|w| !(w[1] > w[0])) {
            return contract(format!("radius {r}: attainment times must be strictly increasing"));
        }
        let sigma = sigma_ugs.at(r);
        for (n, &eps) in tab.levels.iter().enumerate() {
            let want = sigma * 0.5f64.powi(n as i32);
            if (eps - want).abs() > 1e-12 * want {
                return contract(format!("radius {r}: level {n} is {eps}, expected 2^-{n} σ(r) = {want}"));
            }
        }
        if r == 0.0 {
            continue;
        }
        let mut pts = Vec::with_capacity(tab.times.len());
        pts.push((0.0, 2.0 * sigma));
        for n in 1..tab.times.len() {
            pts.push((tab.times[n], tab.levels[n - 1]));
        }
        let w = ScalarCurve::pwl(pts, CurveClass::L)?;
        let slice = match slices.last() {
            Some(prev) => {
                let env = pwl::upper_envelope(&[prev.points().unwrap(), w.points().unwrap()], true);
                ScalarCurve::pwl(env, CurveClass::L)?
            }
            None => w,
        };
        radii.push(r);
        slices.push(slice);
    }
    if radii.is_empty() {
        return contract("decay table has no positive radius");
    }
    KLSurface::new(radii, slices, sigma_ugs.scale(2.0)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(r: f64, times: &[f64], sigma: &ScalarCurve) -> DecayTable {
        DecayTable {
            radius: r,
            times: times.to_vec(),
            levels: (0..times.len()).map(|n| sigma.at(r) * 0.5f64.powi(n as i32)).collect(),
        }
    }

    #[test]
    fn staircase_example() {
        let id = ScalarCurve::identity();
        let kl = kl_from_decay_table(&[table(1.0, &[0.0, 1.0, 2.0], &id)], &id).unwrap();
        assert_eq!(kl.eval(1.0, 0.0), 2.0);
        for k in 0..100 {
            let t = 1.0 + k as f64 * 0.1;
            assert!(kl.eval(1.0, t) <= 1.0);
        }
        for t in [0.0, 0.5, 3.0] {
            assert_eq!(kl.eval(0.0, t), 0.0);
        }
    }

    #[test]
    fn running_sup_over_radii() {
        let id = ScalarCurve::identity();
        let kl = kl_from_decay_table(
            &[table(1.0, &[0.0, 1.0, 2.0, 3.0], &id), table(2.0, &[0.0, 1.0, 2.0, 3.0], &id)],
            &id,
        )
        .unwrap();
        for k in 0..60 {
            let t = k as f64 * 0.1;
            assert!(kl.eval(2.0, t) >= kl.eval(1.0, t));
        }
    }

    #[test]
    fn slower_small_radius_is_carried_up() {
        let id = ScalarCurve::identity();
        // the r = 1 ball decays much more slowly than the r = 2 ball
        let kl = kl_from_decay_table(
            &[table(1.0, &[0.0, 10.0, 20.0], &id), table(2.0, &[0.0, 1.0, 2.0], &id)],
            &id,
        )
        .unwrap();
        assert!(kl.eval(2.0, 5.0) >= kl.eval(1.0, 5.0));
        assert!(kl.eval(2.0, 5.0) <= 4.0);
    }

    #[test]
    fn rejects_bad_tables() {
        let id = ScalarCurve::identity();
        let mut t = table(1.0, &[0.0, 1.0, 1.0], &id);
        assert!(kl_from_decay_table(&[t.clone()], &id).is_err());
        t.times = vec![0.0, 1.0, 2.0];
        t.levels[2] = 0.3;
        assert!(kl_from_decay_table(&[t], &id).is_err());
    }

    #[test]
    fn first_time_below_interpolates() {
        let id = ScalarCurve::identity();
        let kl = kl_from_decay_table(&[table(1.0, &[0.0, 1.0, 2.0, 3.0], &id)], &id).unwrap();
        // slice: (0,2) (1,1) (2,0.5) (3,0.25)
        assert_eq!(kl.first_time_below(1.0, 0.5), Some(2.0));
        assert_eq!(kl.first_time_below(1.0, 0.75), Some(1.5));
        assert_eq!(kl.first_time_below(1.0, 0.1), None);
    }
}
