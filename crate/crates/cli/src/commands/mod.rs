mod certify;
mod gains;
mod simulate;
mod subnet;
mod trace;

pub use certify::{certify, cmd_certify, CertifyReport};
pub use gains::{cmd_gains_check, gains_check, GainsCheckReport, MbiRound};
pub use simulate::{cmd_simulate, SimulateSummary};
pub use subnet::{cmd_subnetwork, subnet, SubnetworkReport, UniformCertificate};
pub use trace::{cmd_trace_theorem1, trace_theorem1, TraceReport};

use netiss_core::{NetworkSpec, Window};

use crate::CliError;

fn horizon(explicit: Option<f64>, spec: &NetworkSpec) -> Result<f64, CliError> {
    let h = explicit
        .or(spec.defaults.horizon)
        .ok_or_else(|| CliError::Usage("no horizon in the config and no network default".into()))?;
    if !(h >= 0.0 && h.is_finite()) {
        return Err(CliError::Usage(format!("horizon must be finite and nonnegative, got {h}")));
    }
    Ok(h)
}

fn working_window(spec: &NetworkSpec, size: Option<usize>) -> Result<Window, CliError> {
    Ok(spec.window(size)?)
}
