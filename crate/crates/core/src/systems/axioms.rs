use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::integrate::{local_error_estimate, rk4_drive};
use super::{InputSignal, SubsystemSpec, TimeDomain};
use crate::error::{contract, Error, Result};
use crate::seed::{self, stream};

/// A system given by its transition map `φ(t, x, u)`.
pub trait TransitionMap: Sync {
    fn time_domain(&self) -> TimeDomain;
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    /// `φ(t, x, u)` for `t` on the time grid. Blow-up is an error.
    fn phi(&self, t: f64, x: &[f64], u: &InputSignal) -> Result<Vec<f64>>;
    /// Step-doubling RK4 local error at `x` with the input frozen at `u`;
    /// zero for discrete systems.
    fn local_error(&self, x: &[f64], u: &[f64]) -> f64;
}

/// A single subsystem as a control system whose input stacks the neighbor
/// values `w_0, …, w_{m-1}` and the external input `u`.
pub struct SubsystemMap<'a> {
    pub spec: &'a SubsystemSpec,
    pub domain: TimeDomain,
    pub blowup_bound: f64,
}

impl SubsystemMap<'_> {
    fn split<'u>(&self, v: &'u [f64]) -> (&'u [f64], f64) {
        let m = self.spec.neighbors().len();
        (&v[..m], v[m])
    }
}

impl TransitionMap for SubsystemMap<'_> {
    fn time_domain(&self) -> TimeDomain {
        self.domain
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn input_dim(&self) -> usize {
        self.spec.neighbors().len() + 1
    }

    fn phi(&self, t: f64, x: &[f64], u: &InputSignal) -> Result<Vec<f64>> {
        match self.domain {
            TimeDomain::Discrete => {
                let mut s = x[0];
                for k in 0..t.round() as usize {
                    let (w, uk) = self.split(u.value_at(k as f64));
                    s = self.spec.rhs(s, w, uk);
                    if !(s.is_finite() && s.abs() <= self.blowup_bound) {
                        return Err(Error::BlowUp { time: (k + 1) as f64, component: 0, detail: format!("state {s}") });
                    }
                }
                Ok(vec![s])
            }
            TimeDomain::Continuous { dt } => {
                let mut last = x.to_vec();
                let blow = rk4_drive(
                    x,
                    t,
                    dt,
                    self.blowup_bound,
                    |tn, y, dy| {
                        let (w, uk) = self.split(u.value_after(tn));
                        dy[0] = self.spec.rhs(y[0], w, uk);
                    },
                    |_, _, y| last.copy_from_slice(y),
                );
                match blow {
                    Some(b) => Err(Error::BlowUp { time: b.time, component: 0, detail: format!("state {}", b.value) }),
                    None => Ok(last),
                }
            }
        }
    }

    fn local_error(&self, x: &[f64], u: &[f64]) -> f64 {
        match self.domain {
            TimeDomain::Discrete => 0.0,
            TimeDomain::Continuous { dt } => {
                let (w, uk) = self.split(u);
                local_error_estimate(x, dt, &mut |y: &[f64], dy: &mut [f64]| dy[0] = self.spec.rhs(y[0], w, uk))
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct AxiomConfig {
    pub samples: usize,
    pub x_scale: f64,
    pub u_scale: f64,
    /// Sampled times are at most this many grid steps.
    pub max_steps: usize,
    /// Pieces per random input signal.
    pub pieces: usize,
}

impl Default for AxiomConfig {
    fn default() -> Self {
        AxiomConfig { samples: 16, x_scale: 1.0, u_scale: 1.0, max_steps: 100, pieces: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomFailure {
    pub axiom: String,
    pub sample: usize,
    pub seed: u64,
    pub defect: f64,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub identity_defect: f64,
    pub cocycle_defect: f64,
    pub causality_defect: f64,
    /// Largest tolerance applied to the cocycle and causality comparisons.
    pub max_tol: f64,
    pub samples: usize,
    pub seed: u64,
    pub failures: Vec<AxiomFailure>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Random piecewise-constant signal whose breaks sit half a grid step off the
/// grid, so that left-constant sampling never straddles a break.
fn random_signal(rng: &mut ChaCha8Rng, dim: usize, pieces: usize, step: f64, span: usize, scale: f64) -> Result<InputSignal> {
    let mut slots: Vec<usize> = (0..pieces.saturating_sub(1)).map(|_| rng.random_range(0..span.max(1))).collect();
    slots.sort_unstable();
    slots.dedup();
    let mut breaks = vec![0.0];
    breaks.extend(slots.iter().map(|&j| (j as f64 + 0.5) * step));
    let values = breaks
        .iter()
        .map(|_| (0..dim).map(|_| scale * rng.random_range(-1.0..=1.0)).collect())
        .collect();
    InputSignal::new(breaks, values, None)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Sampled check of the identity, causality and cocycle axioms.
///
/// Discrete systems must satisfy all three exactly. For continuous systems
/// the tolerance is ten times the step-doubling local error estimate at the
/// compared states plus a rounding allowance proportional to the step count.
pub fn check_axioms(sys: &dyn TransitionMap, cfg: &AxiomConfig, job_seed: u64) -> Result<AxiomReport> {
    if cfg.samples == 0 {
        return contract("axiom harness needs at least one sample");
    }
    let domain = sys.time_domain();
    domain.validate()?;
    let step = domain.step();
    let n = sys.state_dim();
    let m = sys.input_dim();
    let mut rep = AxiomReport {
        identity_defect: 0.0,
        cocycle_defect: 0.0,
        causality_defect: 0.0,
        max_tol: 0.0,
        samples: cfg.samples,
        seed: job_seed,
        failures: Vec::new(),
    };
    for s in 0..cfg.samples {
        let mut rng = seed::rng(job_seed, stream::AXIOMS, s as u64);
        let x: Vec<f64> = (0..n).map(|_| cfg.x_scale * rng.random_range(-1.0..=1.0)).collect();
        let k1 = rng.random_range(0..=cfg.max_steps);
        let k2 = rng.random_range(1..=cfg.max_steps.max(1));
        let span = 2 * (k1 + k2);
        let u = random_signal(&mut rng, m, cfg.pieces, step, span, cfg.u_scale)?;
        let other = random_signal(&mut rng, m, cfg.pieces, step, span, cfg.u_scale)?;
        let (t, h) = (k1 as f64 * step, k2 as f64 * step);
        let fail = |axiom: &str, defect: f64, tol: f64, rep: &mut AxiomReport| {
            if defect > tol {
                rep.failures.push(AxiomFailure { axiom: axiom.into(), sample: s, seed: job_seed, defect, tol });
            }
        };

        let id = sys.phi(0.0, &x, &u)?;
        let d = max_diff(&id, &x);
        rep.identity_defect = rep.identity_defect.max(d);
        fail("identity", d, 0.0, &mut rep);

        let xt = sys.phi(t, &x, &u)?;
        let tol = if domain.is_discrete() {
            0.0
        } else {
            let est = sys.local_error(&x, u.value_at(0.0)).max(sys.local_error(&xt, u.value_after(t)));
            let scale = 1.0 + x.iter().chain(&xt).map(|v| v.abs()).fold(0.0, f64::max);
            10.0 * est + 64.0 * f64::EPSILON * (k1 + k2 + 1) as f64 * scale
        };
        rep.max_tol = rep.max_tol.max(tol);

        let direct = sys.phi(t + h, &x, &u)?;
        let restarted = sys.phi(h, &xt, &u.shift(t)?)?;
        let d = max_diff(&direct, &restarted);
        rep.cocycle_defect = rep.cocycle_defect.max(d);
        fail("cocycle", d, tol, &mut rep);

        let altered = u.concat(t, &other)?;
        let d = max_diff(&xt, &sys.phi(t, &x, &altered)?);
        rep.causality_defect = rep.causality_defect.max(d);
        fail("causality", d, tol, &mut rep);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_axioms_exact() {
        let spec = SubsystemSpec::max(0.5, vec![(1, 0.25)], 1.0).unwrap();
        let sys = SubsystemMap { spec: &spec, domain: TimeDomain::Discrete, blowup_bound: 1e12 };
        let rep = check_axioms(&sys, &AxiomConfig::default(), 11).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(rep.identity_defect, 0.0);
        assert_eq!(rep.cocycle_defect, 0.0);
        assert_eq!(rep.causality_defect, 0.0);
    }

    #[test]
    fn continuous_axioms_within_tolerance() {
        let spec = SubsystemSpec::linear(-1.0, vec![(1, 0.3)], 1.0).unwrap();
        let sys = SubsystemMap { spec: &spec, domain: TimeDomain::Continuous { dt: 1e-3 }, blowup_bound: 1e12 };
        let rep = check_axioms(&sys, &AxiomConfig::default(), 11).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(rep.identity_defect, 0.0);
        assert!(rep.cocycle_defect < 1e-8);
        assert!(rep.causality_defect < 1e-8);
    }
}
