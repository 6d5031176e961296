use netiss_core::gains::Assumption1Report;
use netiss_core::smallgain::{
    deficit, estimate_uniform_sgc, falsify_mbi, finite_cycle_check, CycleReport, MBIWitness,
    SGCReport,
};
use netiss_core::{Error, NetworkSpec, ScalarCurve, Window};
use serde::Serialize;

use super::working_window;
use crate::config::{load_network, GainsCheckConfig};
use crate::{CliError, Job, Outcome};

#[derive(Clone, Debug, Serialize)]
pub struct MbiRound {
    pub xi: ScalarCurve,
    pub budget: usize,
    pub witness: Option<MBIWitness>,
    pub revalidated: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GainsCheckReport {
    pub passed: bool,
    pub network: String,
    pub seed: u64,
    pub window: Vec<usize>,
    pub assumption1: Assumption1Report,
    /// Couplings `(i, j)` in the dynamics with no gain `γ_ij`.
    pub unclaimed_couplings: Vec<(usize, usize)>,
    pub sgc: SGCReport,
    pub xi: Option<ScalarCurve>,
    pub xi_source: &'static str,
    pub mbi: Vec<MbiRound>,
    /// Run only when the index set is finite.
    pub cycle: Option<CycleReport>,
    pub failures: Vec<String>,
}

/// Assumption 1, uniform SGC estimate, ξ, MBI falsification and, for finite
/// index sets, the cycle check.
///
/// A derived ξ is refined when the falsifier finds a witness: the witness's
/// deficit is absorbed into `η̂` and ξ re-derived, for at most
/// `cfg.refine_rounds` rounds. A configured ξ is never refined.
pub fn gains_check(spec: &NetworkSpec, window: &Window, cfg: &GainsCheckConfig, seed: u64) -> Result<GainsCheckReport, CliError> {
    let graph = spec
        .gain_graph
        .as_ref()
        .ok_or_else(|| CliError::Usage("gains-check needs a network with a gain graph".into()))?;
    let mut failures = Vec::new();
    let assumption1 = graph.check_assumption1(&cfg.radii);
    if !assumption1.holds() {
        failures.push("Assumption 1 fails: gains are not uniformly bounded or rows are not finite".to_string());
    }
    let unclaimed_couplings = spec.unclaimed_couplings(window)?;
    if let Some((i, j)) = unclaimed_couplings.first() {
        failures.push(format!("subsystem {i} reads {j} but the gain graph has no gain for that edge"));
    }
    let mut sgc = estimate_uniform_sgc(graph, window, &cfg.radii, &cfg.sampler, seed)?;
    if !sgc.holds {
        let k = sgc.deficits.iter().zip(&sgc.radii).position(|(d, r)| *d <= 1e-12 * r).unwrap_or(0);
        failures.push(format!(
            "uniform small-gain condition fails: deficit {} at radius {} (seed {}, vector in witnesses[{k}])",
            sgc.deficits[k], sgc.radii[k], sgc.seed
        ));
    }
    let derive = |sgc: &SGCReport| -> Result<Option<ScalarCurve>, CliError> {
        match sgc.xi_candidate() {
            Ok(xi) => Ok(Some(xi.scale(1.0 + cfg.xi_margin)?)),
            Err(Error::NotInvertible(_)) => Ok(None),
            Err(e) => Err(e.into()),
        }
    };
    let (mut xi, xi_source) = match &cfg.xi {
        Some(xi) => (Some(xi.clone()), "config"),
        None => (derive(&sgc)?, "derived"),
    };
    let op = graph.operator(window);
    let mut mbi = Vec::new();
    match &xi {
        None => failures.push("no candidate ξ: η̂ is not invertible".to_string()),
        Some(_) => {
            let rounds = if cfg.xi.is_some() { 0 } else { cfg.refine_rounds };
            for round in 0..=rounds {
                let cand = xi.clone().expect("candidate present");
                let witness = falsify_mbi(graph, window, &cand, &cfg.mbi, seed)?;
                let revalidated = witness.as_ref().map(|w| w.revalidate(graph, window, &cand, cfg.mbi.tol));
                mbi.push(MbiRound { xi: cand, budget: cfg.mbi.budget, witness: witness.clone(), revalidated });
                let Some(w) = witness else { break };
                if round == rounds {
                    failures.push(format!(
                        "MBI witness: ‖v‖ = {} > ξ(‖w‖) = {} (seed {}, sample {})",
                        w.norm_v, w.xi_at_w, w.seed, w.sample_index
                    ));
                    break;
                }
                let d = deficit(&op, &w.v);
                sgc.absorb(w.v.clone(), d)?;
                xi = derive(&sgc)?;
                if xi.is_none() {
                    failures.push(format!(
                        "MBI witness (seed {}, sample {}) drives η̂ to a non-invertible curve",
                        w.seed, w.sample_index
                    ));
                    break;
                }
            }
        }
    }
    let cycle = if spec.index_set.is_finite() {
        let c = finite_cycle_check(graph, window, &cfg.radii, &cfg.cycle)?;
        if let Some(off) = &c.offending {
            failures.push(format!(
                "cycle {:?} has composition {} ≥ radius {} at the check grid",
                off.nodes, off.value, off.radius
            ));
        }
        Some(c)
    } else {
        None
    };
    Ok(GainsCheckReport {
        passed: failures.is_empty(),
        network: String::new(),
        seed,
        window: window.indices().to_vec(),
        assumption1,
        unclaimed_couplings,
        sgc,
        xi,
        xi_source,
        mbi,
        cycle,
        failures,
    })
}

pub fn cmd_gains_check(job: &Job) -> Result<Outcome, CliError> {
    let net = load_network(&job.config, &job.base)?;
    let window = working_window(&net.spec, job.config.window)?;
    let mut report = gains_check(&net.spec, &window, &job.config.gains_check, job.seed)?;
    report.network = job.config.source_label();
    let mut out = Outcome { passed: report.passed, ..Default::default() };
    out.message = match report.failures.first() {
        None => format!("gains-check passed, η̂(1) = {}", report.sgc.eta_hat.at(1.0)),
        Some(f) => format!("gains-check failed: {f}"),
    };
    out.json("gains_check.json", &report)?;
    Ok(out)
}
