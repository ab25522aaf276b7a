use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use rgo_sampling::models::{build_model, ModelSpec};
use rgo_sampling::parallel::{run_chains, run_chains_sequential};
use rgo_sampling::reduction::ReductionConfig;
use rgo_sampling::wellcond::sample_wellconditioned;

fn chains(c: &mut Criterion) {
    let m = build_model(&ModelSpec::Gaussian { curvature: (0..8).map(|j| 1.0 + j as f64).collect(), mean: vec![0.0; 8] }).unwrap();
    let red = ReductionConfig::default();
    let job = |_: usize, st: &mut rgo_sampling::chain::ChainState| {
        sample_wellconditioned(&m.f, &m.x_star, 0.1, &red, st).map(|o| o.x[0]).unwrap()
    };
    let mut group = c.benchmark_group("wellcond_chains");
    group.sample_size(10);
    for n in [8usize, 64] {
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, &n| b.iter(|| run_chains(n, 1, job)));
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, &n| b.iter(|| run_chains_sequential(n, 1, job)));
    }
    group.finish();
}

criterion_group!(benches, chains);
criterion_main!(benches);
