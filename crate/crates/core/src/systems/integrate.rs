use serde::{Deserialize, Serialize};

use super::{BlowUpInfo, InputSignal, SubsystemSpec, Trajectory};
use crate::error::{contract, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    /// A trajectory whose norm exceeds this bound is declared blown up.
    pub blowup_bound: f64,
    /// Keep every `record_every`-th grid point (the endpoint is always kept).
    pub record_every: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { blowup_bound: 1e12, record_every: 1 }
    }
}

/// Number of fixed steps covering `[0, horizon]`; the last one may be short.
pub fn step_count(horizon: f64, dt: f64) -> usize {
    if horizon <= 0.0 {
        0
    } else {
        (horizon / dt - 1e-9).ceil().max(1.0) as usize
    }
}

/// Grid time of step `k` out of `n`.
pub fn grid_time(k: usize, n: usize, dt: f64, horizon: f64) -> f64 {
    if k == n {
        horizon
    } else {
        k as f64 * dt
    }
}

/// Workspace for one classical RK4 step.
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(n: usize) -> Self {
        Rk4 { k1: vec![0.0; n], k2: vec![0.0; n], k3: vec![0.0; n], k4: vec![0.0; n], tmp: vec![0.0; n] }
    }

    /// Advance `x` by `h` under `field(x, dx)`.
    pub fn step(&mut self, x: &mut [f64], h: f64, field: &mut impl FnMut(&[f64], &mut [f64])) {
        let n = x.len();
        field(x, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
        }
        field(&self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
        }
        field(&self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        field(&self.tmp, &mut self.k4);
        for i in 0..n {
            x[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Step-doubling estimate of the RK4 local error at `x`: the difference
/// between one step of `h` and two steps of `h/2`.
pub fn local_error_estimate(x: &[f64], h: f64, field: &mut impl FnMut(&[f64], &mut [f64])) -> f64 {
    let mut rk = Rk4::new(x.len());
    let mut one = x.to_vec();
    rk.step(&mut one, h, field);
    let mut two = x.to_vec();
    rk.step(&mut two, 0.5 * h, field);
    rk.step(&mut two, 0.5 * h, field);
    one.iter().zip(&two).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Drive a fixed-step RK4 integration over `[0, horizon]`.
///
/// `field(t_n, x, dx)` is evaluated with inputs frozen at the step start
/// `t_n` (left-constant sampling). `observe(k, t_k, x_k)` sees every grid
/// point including `t = 0`. Integration stops at the first point where the
/// state is non-finite or exceeds `bound`.
pub fn rk4_drive(
    x0: &[f64],
    horizon: f64,
    dt: f64,
    bound: f64,
    mut field: impl FnMut(f64, &[f64], &mut [f64]),
    mut observe: impl FnMut(usize, f64, &[f64]),
) -> Option<BlowUpInfo> {
    let n = step_count(horizon, dt);
    let mut x = x0.to_vec();
    let mut rk = Rk4::new(x.len());
    observe(0, 0.0, &x);
    for k in 0..n {
        let t = grid_time(k, n, dt, horizon);
        let t1 = grid_time(k + 1, n, dt, horizon);
        rk.step(&mut x, t1 - t, &mut |y: &[f64], dy: &mut [f64]| field(t, y, dy));
        if let Some(p) = x.iter().position(|v| !(v.is_finite() && v.abs() <= bound)) {
            return Some(BlowUpInfo { time: t1, component: p, value: x[p] });
        }
        observe(k + 1, t1, &x);
    }
    None
}

/// Integrate one scalar subsystem `ẋ = f(x, w, u)` with neighbor signal `w`
/// (one component per declared neighbor) and scalar input `u`.
pub fn integrate_ode(
    spec: &SubsystemSpec,
    x0: f64,
    w: &InputSignal,
    u: &InputSignal,
    horizon: f64,
    dt: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return contract(format!("horizon must be finite and nonnegative, got {horizon}"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return contract(format!("step must be positive, got {dt}"));
    }
    if w.dim() != spec.neighbors().len() || u.dim() != 1 {
        return contract("neighbor signal must have one component per neighbor and u must be scalar");
    }
    let mut traj = Trajectory::new(vec![0]);
    let stride = cfg.record_every.max(1);
    let n = step_count(horizon, dt);
    let blow = rk4_drive(
        &[x0],
        horizon,
        dt,
        cfg.blowup_bound,
        |t, x, dx| dx[0] = spec.rhs(x[0], w.value_after(t), u.value_after(t)[0]),
        |k, t, x| {
            if k % stride == 0 || k == n {
                traj.push(t, x.to_vec());
            }
        },
    );
    traj.blow_up = blow;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;

    fn decay(rate: f64) -> SubsystemSpec {
        SubsystemSpec::linear(-rate, vec![], 0.0).unwrap()
    }

    #[test]
    fn exponential_decay() {
        let z = InputSignal::zero(0);
        let u = InputSignal::zero(1);
        let tr = integrate_ode(&decay(1.0), 1.0, &z, &u, 1.0, 1e-3, &Default::default()).unwrap();
        assert!((tr.final_state()[0] - (-1.0f64).exp()).abs() < 1e-9);
        assert_eq!(tr.times.len(), 1001);
        let tr = integrate_ode(&decay(0.1), 1.0, &z, &u, 10.0, 1e-3, &Default::default()).unwrap();
        assert!((tr.final_state()[0] - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn equilibrium_and_zero_horizon() {
        let z = InputSignal::zero(0);
        let u = InputSignal::zero(1);
        let tr = integrate_ode(&decay(1.0), 0.0, &z, &u, 2.0, 0.01, &Default::default()).unwrap();
        assert!(tr.states.iter().all(|x| x[0] == 0.0));
        let tr = integrate_ode(&decay(1.0), 3.0, &z, &u, 0.0, 0.01, &Default::default()).unwrap();
        assert_eq!(tr.times, vec![0.0]);
        assert_eq!(tr.states, vec![vec![3.0]]);
    }

    #[test]
    fn fourth_order_convergence() {
        let z = InputSignal::zero(0);
        let u = InputSignal::zero(1);
        let err = |dt: f64| {
            let tr = integrate_ode(&decay(1.0), 1.0, &z, &u, 1.0, dt, &Default::default()).unwrap();
            (tr.final_state()[0] - (-1.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((8.0..=32.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn blow_up_is_flagged() {
        let z = InputSignal::zero(0);
        let u = InputSignal::zero(1);
        let spec = SubsystemSpec::expr("x^2", vec![], &BTreeMap::new()).unwrap();
        let tr = integrate_ode(&spec, 1.0, &z, &u, 2.0, 1e-3, &Default::default()).unwrap();
        let b = tr.blow_up.expect("finite-time escape at t = 1");
        assert!(b.time > 0.9 && b.time < 1.1);
    }

    #[test]
    fn input_is_sampled_left_constant() {
        // u switches from 0 to 1 just after t = 0.5; ẋ = u
        let spec = SubsystemSpec::linear(0.0, vec![], 1.0).unwrap();
        let u = InputSignal::scalar_steps(&[(0.0, 0.0), (0.5, 1.0)]).unwrap();
        let tr = integrate_ode(&spec, 0.0, &InputSignal::zero(0), &u, 1.0, 0.25, &Default::default()).unwrap();
        assert_eq!(tr.states.iter().map(|x| x[0]).collect::<Vec<_>>(), vec![0.0, 0.0, 0.0, 0.25, 0.5]);
    }
}
