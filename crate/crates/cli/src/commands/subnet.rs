use netiss_core::certify::{check_holdout, HoldoutBound, HoldoutConfig, HoldoutReport};
use netiss_core::network::subnetwork;
use netiss_core::seed::{self, stream};
use netiss_core::{KLSurface, NetworkSpec, ScalarCurve, Window};
use serde::Serialize;

use super::certify::{certify, certify_message, CertifyReport};
use super::gains::{gains_check, GainsCheckReport};
use super::horizon;
use crate::config::load_network;
use crate::{CliError, Job, JobConfig, Outcome};

/// `‖x(t)‖ ≤ β(‖x0‖, t) + γ(‖u‖)` with `β = max_i β̃_i`.
#[derive(Clone, Debug, Serialize)]
pub struct UniformCertificate {
    pub beta: KLSurface,
    pub gamma: ScalarCurve,
    pub holdout: HoldoutReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubnetworkReport {
    pub passed: bool,
    pub network: String,
    pub seed: u64,
    pub indices: Vec<usize>,
    /// Absent when the network carries no gain graph.
    pub gains_check: Option<GainsCheckReport>,
    pub certify: CertifyReport,
    pub uniform: UniformCertificate,
}

/// Restrict to `q`, then run gains-check and certify on the restriction and
/// validate the uniform bound on a separate holdout ensemble.
pub fn subnet(spec: &NetworkSpec, q: &Window, cfg: &JobConfig, h: f64, job_seed: u64) -> Result<SubnetworkReport, CliError> {
    let sub = subnetwork(spec, q)?;
    let window = sub.window(None)?;
    let gains = match sub.gain_graph {
        Some(_) => Some(gains_check(&sub, &window, &cfg.gains_check, job_seed)?),
        None => None,
    };
    let cert = certify(&sub, &window, &cfg.certify, h, job_seed)?;
    let beta = cert.certificate.uniform_beta()?;
    let gamma = cert.certificate.gamma.clone();
    let holdout_cfg = HoldoutConfig {
        ensemble: cfg.certify.holdout.clone(),
        radii: cfg.certify.radii.clone(),
        horizon: h,
        tol: cfg.certify.tol,
    };
    let holdout = check_holdout(
        &sub.compile(&window)?,
        &HoldoutBound::Uniform(&beta, &gamma),
        &holdout_cfg,
        seed::derive(job_seed, stream::ENSEMBLE_HOLDOUT, 1),
        stream::ENSEMBLE_HOLDOUT,
    )?;
    let passed = gains.as_ref().is_none_or(|g| g.passed) && cert.passed && holdout.passed();
    Ok(SubnetworkReport {
        passed,
        network: String::new(),
        seed: job_seed,
        indices: q.indices().to_vec(),
        gains_check: gains,
        certify: cert,
        uniform: UniformCertificate { beta, gamma, holdout },
    })
}

pub fn cmd_subnetwork(job: &Job) -> Result<Outcome, CliError> {
    let cfg = &job.config;
    if cfg.subnetwork.indices.is_empty() {
        return Err(CliError::Usage("subnetwork needs a nonempty `subnetwork.indices` list".into()));
    }
    let net = load_network(cfg, &job.base)?;
    let q = Window::new(cfg.subnetwork.indices.clone())?;
    let h = horizon(cfg.certify.horizon, &net.spec)?;
    let mut report = subnet(&net.spec, &q, cfg, h, job.seed)?;
    report.network = cfg.source_label();
    let mut out = Outcome { passed: report.passed, ..Default::default() };
    out.message = if let Some(f) = report.gains_check.as_ref().and_then(|g| g.failures.first()) {
        format!("gains-check on the subnetwork failed: {f}")
    } else if !report.certify.passed {
        certify_message(&report.certify)
    } else if let Some(v) = &report.uniform.holdout.violation {
        format!(
            "uniform bound violated: ‖x({})‖ = {} > {} at component {} (member seed {})",
            v.time, v.value, v.bound, v.component, v.seed
        )
    } else {
        format!("uniform ISS certificate on {} indices (holdout residual {})", q.len(), report.uniform.holdout.max_residual)
    };
    out.json("subnetwork.json", &report)?;
    Ok(out)
}
