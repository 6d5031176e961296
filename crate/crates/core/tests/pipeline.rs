use std::collections::BTreeMap;

use netiss_core::catalog::from_ref;
use netiss_core::certify::{
    build_nonuniform_iss, check_holdout, compute_band_limsups, dyadic_levels, estimate_attainment_times, fit_ugs,
    sample_ugs, Band, EnsembleConfig, HoldoutBound, HoldoutConfig, Tolerance,
};
use netiss_core::network::{IndexedSubsystem, NetworkDefaults, SimConfig, SubsystemRule};
use netiss_core::seed::stream;
use netiss_core::systems::{integrate_ode, IntegratorConfig, SubsystemSpec};
use netiss_core::{IndexSet, InputSignal, NetworkSpec, TimeDomain, Window};

fn scalar_contraction() -> NetworkSpec {
    NetworkSpec {
        time_domain: TimeDomain::Discrete,
        index_set: IndexSet::Finite { n: 1 },
        subsystems: SubsystemRule::List {
            subsystems: vec![IndexedSubsystem { i: 0, spec: SubsystemSpec::linear(0.5, vec![], 1.0).unwrap() }],
        },
        gain_graph: None,
        defaults: NetworkDefaults::default(),
    }
}

#[test]
fn ugs_gain_of_halving_map_is_twice_the_input() {
    // x+ = 0.5 x + u: sup_k x(k) <= x0 + 2‖u‖, attained by x0 = 0 and constant u
    let spec = scalar_contraction();
    let net = spec.compile(&spec.window(None).unwrap()).unwrap();
    let radii = [0.5, 1.0, 2.0, 4.0];
    let samples = sample_ugs(&net, &radii, &EnsembleConfig::default(), 80.0, 11, stream::ENSEMBLE_FIT).unwrap();
    let ugs = fit_ugs(&samples).unwrap();
    for r in radii {
        assert!((ugs.gamma.at(r) - 2.0 * r).abs() <= 1e-9 * r, "γ({r}) = {}", ugs.gamma.at(r));
        assert!((ugs.sigma.at(r) - r).abs() <= 1e-9 * r, "σ({r}) = {}", ugs.sigma.at(r));
    }
    assert!(ugs.residual(&samples) <= 1e-12);
}

#[test]
fn discrete_chain_components_ignore_the_far_window() {
    let entry = from_ref("catalog:nonuniform-discrete-chain").unwrap();
    let steps = 5;
    let sim = |n: usize| {
        let w = entry.spec.window(Some(n)).unwrap();
        entry.spec.compile(&w).unwrap().simulate(&vec![1.0; n], &InputSignal::constant(vec![0.1]).unwrap(), steps as f64, &SimConfig::default()).unwrap()
    };
    let (short, long) = (sim(20), sim(40));
    for p in 0..20 - steps {
        assert_eq!(short.component(p), long.component(p), "component {p}");
    }
    assert_ne!(short.component(19), long.component(19));
}

#[test]
fn chain_restricted_to_even_indices_has_no_edges() {
    let entry = from_ref("catalog:nonuniform-discrete-chain").unwrap();
    let graph = entry.spec.gain_graph.as_ref().unwrap();
    let even = Window::new((0..20).map(|k| 2 * k).collect()).unwrap();
    assert!(graph.restrict(&even).unwrap().edges_within(&even).is_empty());
    let all = Window::range(0, 40).unwrap();
    assert!(!graph.edges_within(&all).is_empty());
}

#[test]
fn zero_input_tails_of_the_counterexample_decay() {
    let entry = from_ref("catalog:counterexample-chain").unwrap();
    let n = 4;
    let net = entry.spec.compile(&entry.spec.window(Some(n)).unwrap()).unwrap();
    let tails = [4.0, 8.0, 12.0];
    let e = compute_band_limsups(&net, 1.0, Band::Small { q: 0.0 }, &EnsembleConfig::default(), 16.0, &tails, 5, stream::BAND).unwrap();
    assert!(e.tails_nonincreasing());
    let labels = net.window().indices().to_vec();
    for (j, &s) in tails.iter().enumerate() {
        for (p, &i) in labels.iter().enumerate() {
            let closed = (-s / i as f64).exp();
            assert!((e.y[j][p] - closed).abs() < 1e-9, "i = {i}, tail {s}: {} vs {closed}", e.y[j][p]);
        }
    }
}

#[test]
fn uniform_two_cycle_certificate_gives_a_uniform_bound() {
    let entry = from_ref("catalog:uniform-2-cycle").unwrap();
    let window = entry.spec.window(None).unwrap();
    let net = entry.spec.compile(&window).unwrap();
    let radii = vec![0.25, 0.5, 1.0, 2.0, 4.0];
    let horizon = 60.0;
    let cfg = EnsembleConfig::default();
    let ugs = fit_ugs(&sample_ugs(&net, &radii, &cfg, horizon, 1, stream::ENSEMBLE_FIT).unwrap()).unwrap();
    let levels: Vec<Vec<f64>> = radii.iter().map(|&r| dyadic_levels(&ugs.sigma, r, 8)).collect();
    let table = estimate_attainment_times(&net, &radii, &levels, &ugs.gamma, &cfg, horizon, 2, stream::ENSEMBLE_FIT).unwrap();
    let holdout = HoldoutConfig { ensemble: cfg.clone(), radii: radii.clone(), horizon, tol: Tolerance::default() };
    let cert = build_nonuniform_iss(&net, &table, &ugs, &holdout, 3, stream::ENSEMBLE_HOLDOUT).unwrap();
    assert!(cert.passed(), "{:?}", cert.holdout.violation);
    for &r in &radii {
        for t in [0.0, 1.0, 5.0, 20.0] {
            let b = cert.surfaces.iter().map(|s| s.eval(r, t)).collect::<Vec<_>>();
            assert!(b.iter().all(|v| *v <= cert.sigma_tilde.at(r) * (1.0 + 1e-12)));
        }
    }
    let beta = cert.uniform_beta().unwrap();
    let report = check_holdout(&net, &HoldoutBound::Uniform(&beta, &cert.gamma), &holdout, 4, stream::ENSEMBLE_HOLDOUT).unwrap();
    assert!(report.passed(), "{:?}", report.violation);
}

#[test]
fn component_replays_against_frozen_neighbors() {
    let entry = from_ref("catalog:linear-diffusive-chain?eps=0.2").unwrap();
    let window = entry.spec.window(Some(6)).unwrap();
    let net = entry.spec.compile(&window).unwrap();
    let (dt, horizon) = (1e-3, 4.0);
    let x0 = [1.0, -0.5, 0.8, 0.2, -1.0, 0.6];
    let u = InputSignal::constant(vec![0.2]).unwrap();
    let traj = net.simulate(&x0, &u, horizon, &SimConfig::default()).unwrap();
    for p in [0, 2, 5] {
        let spec = &net.specs()[p];
        let nbrs = net.neighbor_positions(p);
        let samples: Vec<Vec<f64>> = traj.states.iter().map(|x| nbrs.iter().map(|&q| x[q]).collect()).collect();
        // frozen neighbors are held constant over each step, so the replay
        // is only first-order accurate in their variation
        let mut slack = 0.0;
        for (k, &q) in nbrs.iter().enumerate() {
            let jump = traj.states.windows(2).map(|w| (w[1][q] - w[0][q]).abs()).fold(0.0, f64::max);
            let coupling = match spec.dynamics() {
                netiss_core::systems::Dynamics::Linear { b, .. } => b[k].abs(),
                _ => unreachable!(),
            };
            slack += horizon * coupling * jump;
        }
        let w = InputSignal::zero_order_hold(&traj.times, samples).unwrap();
        let alone = integrate_ode(spec, x0[p], &w, &u, horizon, dt, &IntegratorConfig::default()).unwrap();
        let defect = alone.states.iter().zip(&traj.states).map(|(a, b)| (a[0] - b[p]).abs()).fold(0.0, f64::max);
        assert!(defect <= 10.0 * slack, "component {p}: defect {defect:e}, slack {slack:e}");
        assert!(defect > 0.0 || nbrs.is_empty());
    }
}

#[test]
fn catalog_params_reject_unknown_keys() {
    let mut p = BTreeMap::new();
    p.insert("bogus".to_string(), 1.0);
    assert!(netiss_core::catalog::instantiate("uniform-2-cycle", &p).is_err());
}
