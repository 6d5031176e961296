use serde::{Deserialize, Serialize};

use super::attainment::{dyadic_levels, AttainmentTable};
use super::ensemble::{run_members, sample_cells, Cell, EnsembleConfig};
use super::ugs::UGSCertificate;
use crate::comparison::{kl_from_decay_table, DecayTable, KLSurface, ScalarCurve};
use crate::error::{contract, Error, Result};
use crate::network::CompiledNetwork;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-6, rel: 1e-3 }
    }
}

impl Tolerance {
    pub fn at(&self, bound: f64) -> f64 {
        self.abs + self.rel * bound.abs()
    }
}

/// Worst holdout sample: `value − bound` at `(component, time)` of the
/// member with the given seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldoutWorst {
    pub seed: u64,
    pub component: usize,
    pub time: f64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub members: usize,
    /// `max (value − bound)` over all members, components and grid times.
    pub max_residual: f64,
    /// Largest violation beyond tolerance, if any.
    pub violation: Option<HoldoutWorst>,
    pub worst: Option<HoldoutWorst>,
}

impl HoldoutReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonUniformISSCertificate {
    pub labels: Vec<usize>,
    pub radii: Vec<f64>,
    /// `β̃_i`, one per component.
    pub surfaces: Vec<KLSurface>,
    /// `σ̃ = 2σ_UGS`, dominating every `β̃_i`.
    pub sigma_tilde: ScalarCurve,
    /// `γ = max(σ_UGS + γ_UGS, γ̂)`.
    pub gamma: ScalarCurve,
    pub depth: usize,
    pub holdout: HoldoutReport,
}

impl NonUniformISSCertificate {
    pub fn passed(&self) -> bool {
        self.holdout.passed()
    }

    /// `β(r, t) = max_i β̃_i(r, t)`, a uniform KL bound on a finite window.
    pub fn uniform_beta(&self) -> Result<KLSurface> {
        let refs: Vec<&KLSurface> = self.surfaces.iter().collect();
        KLSurface::pointwise_max(&refs)
    }
}

/// Which bound a holdout run is checked against.
pub enum HoldoutBound<'a> {
    /// `|x_i(t)| ≤ β̃_i(‖x0‖, t) + γ(‖u‖)` for every component.
    PerComponent(&'a [KLSurface], &'a ScalarCurve),
    /// `‖x(t)‖ ≤ β(‖x0‖, t) + γ(‖u‖)`.
    Uniform(&'a KLSurface, &'a ScalarCurve),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldoutConfig {
    pub ensemble: EnsembleConfig,
    pub radii: Vec<f64>,
    pub horizon: f64,
    pub tol: Tolerance,
}

struct Track {
    x_norm: f64,
    u_norm: f64,
    seed: u64,
    worst: Option<HoldoutWorst>,
    violation: Option<HoldoutWorst>,
}

fn residual(w: &Option<HoldoutWorst>) -> f64 {
    w.as_ref().map_or(f64::NEG_INFINITY, |w| w.value - w.bound)
}

impl Track {
    fn see(&mut self, component: usize, time: f64, value: f64, bound: f64, tol: &Tolerance) {
        let r = value - bound;
        let over = r > tol.at(bound);
        if r > residual(&self.worst) || (over && r > residual(&self.violation)) {
            let w = HoldoutWorst { seed: self.seed, component, time, value, bound };
            if over && r > residual(&self.violation) {
                self.violation = Some(w.clone());
            }
            if r > residual(&self.worst) {
                self.worst = Some(w);
            }
        }
    }
}

/// Check a bound on fresh trajectories with `‖x0‖ = r`, `‖u‖ ≤ r` for each
/// holdout radius.
pub fn check_holdout(
    net: &CompiledNetwork,
    bound: &HoldoutBound,
    cfg: &HoldoutConfig,
    job: u64,
    stream: u64,
) -> Result<HoldoutReport> {
    let cells: Vec<Cell> = cfg.radii.iter().map(|&r| Cell::new(r, 0.0, r)).collect::<Result<_>>()?;
    let members = sample_cells(job, stream, &cells, net.len(), &cfg.ensemble, net.time_domain().step(), cfg.horizon)?;
    let labels = net.window().indices();
    let runs = run_members(
        net,
        &members,
        cfg.horizon,
        cfg.ensemble.blowup_bound,
        |m| Track { x_norm: m.x_norm, u_norm: m.u_norm, seed: m.seed, worst: None, violation: None },
        |st, _, t, x| match bound {
            HoldoutBound::PerComponent(surfaces, gamma) => {
                let g = gamma.at(st.u_norm);
                for (p, xp) in x.iter().enumerate() {
                    let b = surfaces[p].eval(st.x_norm, t) + g;
                    st.see(labels[p], t, xp.abs(), b, &cfg.tol);
                }
            }
            HoldoutBound::Uniform(beta, gamma) => {
                let (p, v) = x.iter().enumerate().fold((0, 0.0f64), |a, (p, v)| if v.abs() > a.1 { (p, v.abs()) } else { a });
                let b = beta.eval(st.x_norm, t) + gamma.at(st.u_norm);
                st.see(labels[p], t, v, b, &cfg.tol);
            }
        },
    )?;
    let mut report = HoldoutReport { members: members.len(), max_residual: f64::NEG_INFINITY, violation: None, worst: None };
    for tr in runs {
        if residual(&tr.worst) > residual(&report.worst) {
            report.worst = tr.worst;
        }
        if residual(&tr.violation) > residual(&report.violation) {
            report.violation = tr.violation;
        }
    }
    report.max_residual = residual(&report.worst);
    Ok(report)
}

/// Decay tables for component `p`: `τ_{p,0} = 0`, later times forced
/// strictly increasing by at least one grid step.
fn decay_tables(table: &AttainmentTable, p: usize, depth: usize) -> Result<Vec<DecayTable>> {
    (0..table.radii.len())
        .map(|j| {
            let r = table.radii[j];
            let mut times = vec![0.0];
            for n in 1..=depth {
                let t = table.get(j, n, p).ok_or_else(|| {
                    Error::Certification(format!(
                        "level n = {n} not attained within the horizon for component i = {} at radius r = {r}",
                        table.labels[p]
                    ))
                })?;
                let prev = *times.last().unwrap();
                times.push(t.max(prev + table.step));
            }
            Ok(DecayTable { radius: r, times, levels: table.levels[j][..=depth].to_vec() })
        })
        .collect()
}

/// Assemble `β̃_i`, `σ̃` and `γ` from dyadic attainment data and validate the
/// resulting bound on a holdout ensemble.
pub fn build_nonuniform_iss(
    net: &CompiledNetwork,
    table: &AttainmentTable,
    ugs: &UGSCertificate,
    holdout: &HoldoutConfig,
    job: u64,
    stream: u64,
) -> Result<NonUniformISSCertificate> {
    if table.labels != net.window().indices() {
        return contract("attainment table and network window differ");
    }
    let depth = table.levels.iter().map(|l| l.len()).min().unwrap_or(0).saturating_sub(1);
    for (j, &r) in table.radii.iter().enumerate() {
        let want = dyadic_levels(&ugs.sigma, r, depth);
        if table.levels[j][..=depth].iter().zip(&want).any(|(a, b)| (a - b).abs() > 1e-12 * b.abs()) {
            return contract(format!("attainment levels at r = {r} are not 2^-n σ_UGS(r)"));
        }
    }
    let surfaces = (0..table.labels.len())
        .map(|p| kl_from_decay_table(&decay_tables(table, p, depth)?, &ugs.sigma))
        .collect::<Result<Vec<_>>>()?;
    let sigma_tilde = ugs.sigma.scale(2.0)?;
    let gamma = ScalarCurve::max(&[ScalarCurve::sum(&[ugs.sigma.clone(), ugs.gamma.clone()])?, table.gamma_hat.clone()])?;
    let report = check_holdout(net, &HoldoutBound::PerComponent(&surfaces, &gamma), holdout, job, stream)?;
    Ok(NonUniformISSCertificate {
        labels: table.labels.clone(),
        radii: table.radii.clone(),
        surfaces,
        sigma_tilde,
        gamma,
        depth,
        holdout: report,
    })
}
