use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use netiss_core::catalog::from_ref;
use netiss_core::comparison::{kl_from_decay_table, DecayTable};
use netiss_core::network::SimConfig;
use netiss_core::smallgain::{estimate_uniform_sgc, SamplerConfig};
use netiss_core::{InputSignal, NonnegSequence, ScalarCurve, Window};

fn gain_operator(c: &mut Criterion) {
    let entry = from_ref("catalog:nonuniform-discrete-chain").unwrap();
    let graph = entry.spec.gain_graph.unwrap();
    let mut group = c.benchmark_group("apply_chain");
    for n in [1_000usize, 100_000] {
        let window = Window::range(0, n).unwrap();
        let op = graph.operator(&window);
        let s = NonnegSequence::new((0..n).map(|i| (i % 7) as f64).collect()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| op.apply(black_box(&s)).unwrap()));
    }
    group.finish();
}

fn simulate(c: &mut Criterion) {
    let entry = from_ref("catalog:counterexample-chain").unwrap();
    let mut group = c.benchmark_group("simulate_counterexample");
    group.sample_size(10);
    for n in [10usize, 100] {
        let net = entry.spec.compile(&entry.spec.window(Some(n)).unwrap()).unwrap();
        let x0 = vec![1.0; n];
        let u = InputSignal::zero(1);
        let cfg = SimConfig { record_every: 1000, ..SimConfig::default() };
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| net.simulate(black_box(&x0), &u, 5.0, &cfg).unwrap()));
    }
    group.finish();
}

fn kl_construction(c: &mut Criterion) {
    let sigma = ScalarCurve::identity();
    let tables: Vec<DecayTable> = [0.25, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&r| DecayTable {
            radius: r,
            times: (0..=10).map(|n| n as f64 * std::f64::consts::LN_2 * (1.0 + r)).collect(),
            levels: (0..=10).map(|n| r * 0.5f64.powi(n)).collect(),
        })
        .collect();
    c.bench_function("kl_from_decay_table", |b| b.iter(|| kl_from_decay_table(black_box(&tables), &sigma).unwrap()));
}

fn sgc(c: &mut Criterion) {
    let entry = from_ref("catalog:nonuniform-discrete-chain").unwrap();
    let graph = entry.spec.gain_graph.unwrap();
    let window = Window::range(0, 16).unwrap();
    let radii = [0.25, 0.5, 1.0, 2.0, 4.0];
    let cfg = SamplerConfig { samples_per_radius: 500, exact_when_available: false, polish_steps: 100 };
    let mut group = c.benchmark_group("estimate_uniform_sgc");
    group.sample_size(10);
    group.bench_function("chain16", |b| b.iter(|| estimate_uniform_sgc(&graph, &window, &radii, &cfg, black_box(7)).unwrap()));
    group.finish();
}

criterion_group!(benches, gain_operator, simulate, kl_construction, sgc);
criterion_main!(benches);
