use serde::{Deserialize, Serialize};

use super::ensemble::{run_members, sample_cells, Cell, EnsembleConfig};
use crate::comparison::{fit_monotone_envelope, ScalarCurve};
use crate::error::{contract, Error, Result};
use crate::network::CompiledNetwork;

/// Slope added to flat envelopes so that they become K∞.
pub const LIFT_SLOPE: f64 = 1e-9;

/// One trajectory reduced to its labels and `sup_t ‖φ(t)‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UgsSample {
    pub x_norm: f64,
    pub u_norm: f64,
    pub sup_norm: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UGSCertificate {
    pub sigma: ScalarCurve,
    pub gamma: ScalarCurve,
    /// Factor applied to both envelopes so that `σ + γ` dominates every sample.
    pub inflation: f64,
    /// `max (sup‖φ‖ − σ(‖x‖) − γ(‖u‖))` over the fitting samples.
    pub fit_residual: f64,
    pub samples: usize,
}

impl UGSCertificate {
    /// `μ(r) = σ(r) + γ(r)`.
    pub fn mu(&self, r: f64) -> f64 {
        self.sigma.at(r) + self.gamma.at(r)
    }

    /// Largest violation of the additive bound over `samples`.
    pub fn residual(&self, samples: &[UgsSample]) -> f64 {
        samples
            .iter()
            .map(|s| s.sup_norm - self.sigma.at(s.x_norm) - self.gamma.at(s.u_norm))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Sampling cells for a UGS fit: both axes and the diagonal of the radius grid.
pub fn ugs_cells(radii: &[f64]) -> Result<Vec<Cell>> {
    let mut cells = Vec::with_capacity(3 * radii.len());
    for &r in radii {
        cells.push(Cell::new(r, 0.0, 0.0)?);
        cells.push(Cell::new(0.0, r, r)?);
        cells.push(Cell::new(r, r, r)?);
    }
    Ok(cells)
}

/// Simulate the UGS ensemble and reduce each member to a [`UgsSample`].
pub fn sample_ugs(
    net: &CompiledNetwork,
    radii: &[f64],
    cfg: &EnsembleConfig,
    horizon: f64,
    job: u64,
    stream: u64,
) -> Result<Vec<UgsSample>> {
    let members = sample_cells(job, stream, &ugs_cells(radii)?, net.len(), cfg, net.time_domain().step(), horizon)?;
    let sups = run_members(net, &members, horizon, cfg.blowup_bound, |_| 0.0f64, |s, _, _, x| {
        *s = x.iter().fold(*s, |a, v| a.max(v.abs()));
    })?;
    Ok(members
        .iter()
        .zip(sups)
        .map(|((_, m), sup_norm)| UgsSample { x_norm: m.x_norm, u_norm: m.u_norm, sup_norm, seed: m.seed })
        .collect())
}

/// Fit `‖φ(t, x, u)‖ ≤ σ(‖x‖) + γ(‖u‖)`.
///
/// `σ` is the monotone envelope of the zero-input samples and `γ` that of
/// the zero-state samples, both lifted to K∞. Both are then scaled by the
/// smallest factor `≥ 1` for which the sum dominates every sample.
pub fn fit_ugs(samples: &[UgsSample]) -> Result<UGSCertificate> {
    if let Some(s) = samples.iter().find(|s| !s.sup_norm.is_finite()) {
        return Err(Error::Certification(format!("unbounded trajectory (member seed {})", s.seed)));
    }
    let axis = |pick: &dyn Fn(&UgsSample) -> Option<f64>| -> Vec<(f64, f64)> {
        samples.iter().filter_map(|s| pick(s).map(|r| (r, s.sup_norm))).collect()
    };
    let sig = axis(&|s| (s.u_norm == 0.0).then_some(s.x_norm));
    let gam = axis(&|s| (s.x_norm == 0.0).then_some(s.u_norm));
    if sig.is_empty() || gam.is_empty() {
        return contract("UGS fit needs samples with zero input and samples with zero initial state");
    }
    let sigma = fit_monotone_envelope(&sig, true)?.lift_to_kinf(LIFT_SLOPE)?;
    let gamma = fit_monotone_envelope(&gam, true)?.lift_to_kinf(LIFT_SLOPE)?;
    let mut inflation = 1.0f64;
    for s in samples {
        let bound = sigma.at(s.x_norm) + gamma.at(s.u_norm);
        if s.sup_norm > bound {
            if bound == 0.0 {
                return Err(Error::Certification(format!(
                    "nonzero response from zero state and input (member seed {})",
                    s.seed
                )));
            }
            inflation = inflation.max(s.sup_norm / bound);
        }
    }
    let (sigma, gamma) = if inflation > 1.0 {
        // one ulp of headroom so the scaled bound is not undercut by rounding
        let c = inflation * (1.0 + 4.0 * f64::EPSILON);
        (sigma.scale(c)?, gamma.scale(c)?)
    } else {
        (sigma, gamma)
    };
    let mut cert = UGSCertificate { sigma, gamma, inflation, fit_residual: 0.0, samples: samples.len() };
    cert.fit_residual = cert.residual(samples);
    Ok(cert)
}
