use netiss_core::certify::{
    build_nonuniform_iss, dyadic_levels, estimate_attainment_times, fit_ugs, sample_ugs, AttainmentTable,
    HoldoutConfig, NonUniformISSCertificate, UGSCertificate,
};
use netiss_core::seed::{self, stream};
use netiss_core::{NetworkSpec, Window};
use serde::Serialize;

use super::{horizon, working_window};
use crate::config::{load_network, CertifyConfig};
use crate::{CliError, Job, Outcome};

#[derive(Clone, Debug, Serialize)]
pub struct CertifyReport {
    pub passed: bool,
    pub network: String,
    pub seed: u64,
    pub window: Vec<usize>,
    pub horizon: f64,
    pub ugs: UGSCertificate,
    /// `max (sup‖φ‖ − σ(‖x‖) − γ(‖u‖))` on a fresh UGS ensemble.
    pub ugs_holdout_residual: f64,
    pub attainment: AttainmentTable,
    pub certificate: NonUniformISSCertificate,
}

/// UGS fit, dyadic attainment times and the per-component KL bounds,
/// validated on a holdout ensemble.
pub fn certify(spec: &NetworkSpec, window: &Window, cfg: &CertifyConfig, h: f64, job_seed: u64) -> Result<CertifyReport, CliError> {
    let net = spec.compile(window)?;
    let fit_job = seed::derive(job_seed, stream::ENSEMBLE_FIT, 0);
    let samples = sample_ugs(&net, &cfg.radii, &cfg.ensemble, h, fit_job, stream::ENSEMBLE_FIT)?;
    let ugs = fit_ugs(&samples)?;
    let check_job = seed::derive(job_seed, stream::ENSEMBLE_HOLDOUT, 0);
    let fresh = sample_ugs(&net, &cfg.radii, &cfg.holdout, h, check_job, stream::ENSEMBLE_HOLDOUT)?;
    let ugs_holdout_residual = ugs.residual(&fresh);
    let levels: Vec<Vec<f64>> = cfg.radii.iter().map(|&r| dyadic_levels(&ugs.sigma, r, cfg.depth)).collect();
    let gamma_hat = cfg.gamma_hat.clone().unwrap_or_else(|| ugs.gamma.clone());
    let tab_job = seed::derive(job_seed, stream::ENSEMBLE_FIT, 1);
    let attainment =
        estimate_attainment_times(&net, &cfg.radii, &levels, &gamma_hat, &cfg.ensemble, h, tab_job, stream::ENSEMBLE_FIT)?;
    let holdout = HoldoutConfig { ensemble: cfg.holdout.clone(), radii: cfg.radii.clone(), horizon: h, tol: cfg.tol };
    let certificate = build_nonuniform_iss(&net, &attainment, &ugs, &holdout, job_seed, stream::ENSEMBLE_HOLDOUT)?;
    Ok(CertifyReport {
        passed: certificate.passed(),
        network: String::new(),
        seed: job_seed,
        window: window.indices().to_vec(),
        horizon: h,
        ugs,
        ugs_holdout_residual,
        attainment,
        certificate,
    })
}

pub(super) fn certify_message(r: &CertifyReport) -> String {
    match &r.certificate.holdout.violation {
        None => format!(
            "certificate validated on {} holdout trajectories (max residual {})",
            r.certificate.holdout.members, r.certificate.holdout.max_residual
        ),
        Some(v) => format!(
            "holdout violation: |x_{}({})| = {} > bound {} (member seed {})",
            v.component, v.time, v.value, v.bound, v.seed
        ),
    }
}

pub fn cmd_certify(job: &Job) -> Result<Outcome, CliError> {
    let net = load_network(&job.config, &job.base)?;
    let window = working_window(&net.spec, job.config.window)?;
    let h = horizon(job.config.certify.horizon, &net.spec)?;
    let mut report = certify(&net.spec, &window, &job.config.certify, h, job.seed)?;
    report.network = job.config.source_label();
    let mut out = Outcome { passed: report.passed, message: certify_message(&report), ..Default::default() };
    out.json("certify.json", &report)?;
    Ok(out)
}
