use netiss_core::catalog::CatalogEntry;
use netiss_core::certify::{compute_band_limsups, verify_sg_inequality, Band, ProofTrace};
use netiss_core::seed::{self, stream};
use netiss_core::smallgain::estimate_uniform_sgc;
use netiss_core::{NetworkSpec, ScalarCurve, Window};
use serde::Serialize;

use super::{horizon, working_window};
use crate::config::{load_network, GainsCheckConfig, TraceConfig};
use crate::{CliError, Job, Outcome};

#[derive(Clone, Debug, Serialize)]
pub struct TraceReport {
    pub passed: bool,
    pub network: String,
    pub seed: u64,
    pub horizon: f64,
    pub xi: ScalarCurve,
    pub xi_source: &'static str,
    /// Every band's tail sups are nonincreasing in the tail start.
    pub tails_nonincreasing: bool,
    pub trace: ProofTrace,
}

fn resolve_xi(
    spec: &NetworkSpec,
    window: &Window,
    cfg: &TraceConfig,
    entry: Option<&CatalogEntry>,
    gains: &GainsCheckConfig,
    job_seed: u64,
) -> Result<(ScalarCurve, &'static str), CliError> {
    if let Some(xi) = &cfg.xi {
        return Ok((xi.clone(), "config"));
    }
    if let Some(xi) = entry.and_then(|e| e.xi.clone()) {
        return Ok((xi, "catalog"));
    }
    let graph = spec.gain_graph.as_ref().expect("checked by caller");
    let sgc = estimate_uniform_sgc(graph, window, &gains.radii, &gains.sampler, job_seed)?;
    Ok((sgc.xi_candidate()?.scale(1.0 + gains.xi_margin)?, "derived"))
}

/// Band limsups over the `(r, k)` grid and the small-input caps, each checked
/// against the small-gain inequality and the MBI bound.
pub fn trace_theorem1(
    spec: &NetworkSpec,
    window: &Window,
    cfg: &TraceConfig,
    entry: Option<&CatalogEntry>,
    gains: &GainsCheckConfig,
    h: f64,
    job_seed: u64,
) -> Result<TraceReport, CliError> {
    let graph = spec
        .gain_graph
        .as_ref()
        .ok_or_else(|| CliError::Usage("trace-theorem1 needs a network with a gain graph".into()))?;
    let (xi, xi_source) = resolve_xi(spec, window, cfg, entry, gains, job_seed)?;
    let tails = match &cfg.tail_starts {
        Some(t) => t.clone(),
        None => cfg.tail_fractions.iter().map(|f| f * h).collect(),
    };
    let net = spec.compile(window)?;
    let mut bands: Vec<(f64, Band)> = Vec::new();
    for &r in &cfg.radii {
        bands.extend(cfg.bands.iter().map(|&k| (r, Band::Dyadic { k })));
        bands.extend(cfg.small_inputs.iter().map(|&q| (r, Band::Small { q })));
    }
    let mut entries = Vec::with_capacity(bands.len());
    let mut checks = Vec::with_capacity(bands.len());
    for (idx, (r, band)) in bands.into_iter().enumerate() {
        let job = seed::derive(job_seed, stream::BAND, idx as u64);
        let e = compute_band_limsups(&net, r, band, &cfg.ensemble, h, &tails, job, stream::BAND)?;
        checks.push(verify_sg_inequality(&e, graph, window, &xi, cfg.gamma.as_ref(), cfg.tol)?);
        entries.push(e);
    }
    let tails_nonincreasing = entries.iter().all(|e| e.tails_nonincreasing());
    let trace = ProofTrace { labels: window.indices().to_vec(), entries, checks };
    Ok(TraceReport {
        passed: trace.passed(),
        network: String::new(),
        seed: job_seed,
        horizon: h,
        xi,
        xi_source,
        tails_nonincreasing,
        trace,
    })
}

pub fn cmd_trace_theorem1(job: &Job) -> Result<Outcome, CliError> {
    let net = load_network(&job.config, &job.base)?;
    let window = working_window(&net.spec, job.config.window)?;
    let h = horizon(job.config.trace.horizon, &net.spec)?;
    let mut report =
        trace_theorem1(&net.spec, &window, &job.config.trace, net.entry.as_ref(), &job.config.gains_check, h, job.seed)?;
    report.network = job.config.source_label();
    let failed = report.trace.checks.iter().enumerate().find(|(_, c)| !c.passed);
    let mut out = Outcome { passed: report.passed, ..Default::default() };
    out.message = match failed {
        None => format!("all {} bands pass", report.trace.checks.len()),
        Some((idx, c)) => format!(
            "band {:?} at r = {} fails: inequality margin {} (component {:?}), norm margin {} (band job seed {})",
            c.band,
            c.r,
            c.inequality_margin,
            c.worst_component,
            c.norm_margin,
            seed::derive(job.seed, stream::BAND, idx as u64)
        ),
    };
    out.json("trace.json", &report)?;
    out.csv("trace.csv", |w| report.trace.write_csv(w))?;
    Ok(out)
}
