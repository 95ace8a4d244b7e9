use criterion::{black_box, criterion_group, criterion_main, Criterion};

use deepls::config::benchmark_config;
use deepls::geometry::CollocationBatch;
use deepls::loss::objective_gradient;
use deepls::transform::lambert_w0;

fn bench_lambert(c: &mut Criterion) {
    c.bench_function("lambert_w0_mixed", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for i in 0..100 {
                let x = -0.3 + 0.25 * i as f64;
                acc += lambert_w0(black_box(x)).unwrap();
            }
            acc
        })
    });
}

fn bench_forward(c: &mut Criterion) {
    let cfg = benchmark_config("cylinder").unwrap();
    let resolved = cfg.resolve().unwrap();
    let theta = resolved.network.init_parameters(0);
    let mut ws = resolved.network.workspace();
    c.bench_function("network_forward_derivs", |b| {
        b.iter(|| {
            resolved
                .network
                .forward_with_spatial_derivs(&theta.data, black_box(&[0.5, 0.3, 0.0]), &mut ws)
        })
    });
}

fn bench_gradient(c: &mut Criterion) {
    let cfg = benchmark_config("cylinder").unwrap();
    let resolved = cfg.resolve().unwrap();
    let batch =
        CollocationBatch::sample(&resolved.domain, &resolved.segments, 200, 40, 7).unwrap();
    let theta = resolved.network.init_parameters(0);
    let mut ws = resolved.network.workspace();
    let mut grad = vec![0.0; theta.data.len()];
    c.bench_function("objective_gradient_240pts", |b| {
        b.iter(|| {
            objective_gradient(
                &resolved.network,
                &theta.data,
                &batch,
                &resolved.material,
                &resolved.weights,
                &mut ws,
                &mut grad,
            )
            .unwrap()
        })
    });
}

fn bench_sampling(c: &mut Criterion) {
    let cfg = benchmark_config("cylinder").unwrap();
    let resolved = cfg.resolve().unwrap();
    c.bench_function("annulus_sample_1000", |b| {
        b.iter(|| resolved.domain.sample_interior(black_box(1000), 42))
    });
}

criterion_group!(benches, bench_lambert, bench_forward, bench_gradient, bench_sampling);
criterion_main!(benches);
