//! Control systems: time sets, piecewise-constant inputs, scalar subsystem
//! dynamics, the RK4 integrator and a test harness for the system axioms.

mod axioms;
pub mod expr;
mod integrate;
mod model;
mod signal;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use axioms::{check_axioms, AxiomConfig, AxiomFailure, AxiomReport, SubsystemMap, TransitionMap};
pub use integrate::{grid_time, integrate_ode, local_error_estimate, rk4_drive, step_count, IntegratorConfig, Rk4};
pub(crate) use model::rename_source;
pub use model::{expr_vars, step_discrete, Dynamics, SubsystemJson, SubsystemSpec};
pub use signal::{InputSignal, SignalJson};

use crate::error::{contract, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TimeDomain {
    /// Time set ℝ, integrated with fixed step `dt`.
    Continuous { dt: f64 },
    /// Time set ℤ.
    Discrete,
}

impl TimeDomain {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TimeDomain::Continuous { dt } if !(dt > 0.0 && dt.is_finite()) => {
                contract(format!("continuous time needs dt > 0, got {dt}"))
            }
            _ => Ok(()),
        }
    }

    /// Spacing of the sample grid: `dt`, or 1 for discrete time.
    pub fn step(&self) -> f64 {
        match *self {
            TimeDomain::Continuous { dt } => dt,
            TimeDomain::Discrete => 1.0,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, TimeDomain::Discrete)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowUpInfo {
    pub time: f64,
    /// Position of the offending component in the trajectory's label list.
    pub component: usize,
    pub value: f64,
}

/// Sampled solution: `states[k][p]` is component `labels[p]` at `times[k]`;
/// `norms[k]` is the sup norm of `states[k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub labels: Vec<usize>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub norms: Vec<f64>,
    pub blow_up: Option<BlowUpInfo>,
}

impl Trajectory {
    pub fn new(labels: Vec<usize>) -> Self {
        Trajectory { labels, times: Vec::new(), states: Vec::new(), norms: Vec::new(), blow_up: None }
    }

    pub fn push(&mut self, t: f64, x: Vec<f64>) {
        self.norms.push(x.iter().map(|v| v.abs()).fold(0.0, f64::max));
        self.times.push(t);
        self.states.push(x);
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least the initial sample")
    }

    /// Time series of component at position `p`.
    pub fn component(&self, p: usize) -> Vec<f64> {
        self.states.iter().map(|x| x[p]).collect()
    }

    pub fn position(&self, label: usize) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// `t,i,value` rows with 17 significant digits.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "t,i,value")?;
        for (t, x) in self.times.iter().zip(&self.states) {
            for (i, v) in self.labels.iter().zip(x) {
                writeln!(out, "{t:.16e},{i},{v:.16e}")?;
            }
        }
        Ok(())
    }
}
