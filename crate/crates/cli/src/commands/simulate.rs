use netiss_core::network::{truncation_sweep, SimConfig, SweepReport, TruncationPolicy};
use netiss_core::systems::BlowUpInfo;
use netiss_core::InputSignal;
use serde::Serialize;

use super::{horizon, working_window};
use crate::config::{load_network, InitialState};
use crate::{CliError, Job, Outcome};

#[derive(Clone, Debug, Serialize)]
pub struct SimulateSummary {
    pub network: String,
    pub window: Vec<usize>,
    pub horizon: f64,
    pub final_time: f64,
    /// `‖x(final_time)‖_∞`.
    pub final_sup_norm: f64,
    /// `sup_t ‖x(t)‖_∞` over the recorded samples.
    pub max_sup_norm: f64,
    pub blow_up: Option<BlowUpInfo>,
    pub sweep: Option<SweepReport>,
}

pub fn cmd_simulate(job: &Job) -> Result<Outcome, CliError> {
    let cfg = &job.config.simulate;
    let net = load_network(&job.config, &job.base)?;
    let spec = &net.spec;
    let window = working_window(spec, job.config.window)?;
    let h = horizon(cfg.horizon, spec)?;
    let n = window.len();
    let x0 = match &cfg.x0 {
        Some(InitialState::Vector(v)) if v.len() != n => {
            return Err(CliError::Usage(format!("x0 has {} entries for a window of {n}", v.len())));
        }
        Some(InitialState::Vector(v)) => v.clone(),
        Some(InitialState::Constant(c)) => vec![*c; n],
        None => vec![spec.defaults.x0.unwrap_or(0.0); n],
    };
    let u = cfg.input.clone().unwrap_or_else(|| InputSignal::zero(1));
    if u.dim() != 1 && u.dim() != n {
        return Err(CliError::Usage(format!("input has dimension {}; expected 1 or {n}", u.dim())));
    }
    let sim = SimConfig { record_every: cfg.record_every.unwrap_or(1), ..SimConfig::default() };
    let traj = spec.compile(&window)?.simulate(&x0, &u, h, &sim)?;
    let sweep = match &cfg.sweep {
        None => None,
        Some(sizes) => {
            let c = match &cfg.x0 {
                Some(InitialState::Vector(_)) => {
                    return Err(CliError::Usage("a sweep needs a constant x0".into()));
                }
                Some(InitialState::Constant(c)) => *c,
                None => spec.defaults.x0.unwrap_or(0.0),
            };
            if u.dim() != 1 {
                return Err(CliError::Usage("a sweep needs a scalar input".into()));
            }
            Some(truncation_sweep(spec, &TruncationPolicy::new(sizes.clone())?, &|_| c, &u, h, &sim)?)
        }
    };
    let summary = SimulateSummary {
        network: job.config.source_label(),
        window: window.indices().to_vec(),
        horizon: h,
        final_time: *traj.times.last().unwrap_or(&0.0),
        final_sup_norm: *traj.norms.last().unwrap_or(&0.0),
        max_sup_norm: traj.norms.iter().copied().fold(0.0, f64::max),
        blow_up: traj.blow_up.clone(),
        sweep,
    };
    let mut out = Outcome { passed: summary.blow_up.is_none(), ..Default::default() };
    out.message = match &summary.blow_up {
        None => format!("final sup-norm {} at t = {}", summary.final_sup_norm, summary.final_time),
        Some(b) => format!(
            "BIC diagnostic: trajectory unbounded at t = {} in component {} (value {})",
            b.time,
            window.indices()[b.component],
            b.value
        ),
    };
    out.csv("trajectory.csv", |w| traj.write_csv(w))?;
    out.json("summary.json", &summary)?;
    Ok(out)
}
