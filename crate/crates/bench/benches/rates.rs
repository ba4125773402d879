use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mimobc::gradients;
use mimobc::harness::load_fixture;
use mimobc::optim::{self, Alg2Params};
use mimobc::rates;
use std::hint::black_box;

fn lawsr_and_gradients(c: &mut Criterion) {
    let mut group = c.benchmark_group("example1_10db");
    let scenario = load_fixture("example1").unwrap().with_snr_db(10.0);
    let design = optim::algorithm2(&scenario, &Alg2Params::default()).unwrap().design;
    for samples in [1000, 10_000] {
        let ens = scenario.draw_ensembles(samples, 0);
        group.bench_with_input(BenchmarkId::new("lawsr", samples), &ens, |b, ens| {
            b.iter(|| rates::lawsr(black_box(&design), &scenario, ens).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("gradients", samples), &ens, |b, ens| {
            b.iter(|| gradients::gradients(black_box(&design), &scenario, ens).unwrap())
        });
    }
    group.finish();
}

fn closed_form_design(c: &mut Criterion) {
    let mut group = c.benchmark_group("algorithm2");
    for name in ["example1", "example3"] {
        let scenario = load_fixture(name).unwrap().with_snr_db(10.0);
        group.bench_function(name, |b| b.iter(|| optim::algorithm2(black_box(&scenario), &Alg2Params::default()).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, lawsr_and_gradients, closed_form_design);
criterion_main!(benches);
