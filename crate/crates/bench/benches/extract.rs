use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use tangent_graphs::radius::{max_radius, PropertyKind, RadiusOptions};
use tangent_graphs::{component, extract, ExtractOptions, ParamPoint};
use tangent_graphs_bench::{circle, frame, sphere, torus};

fn bench_extract(c: &mut Criterion) {
    let circle = circle();
    let sphere = sphere();
    let torus = torus();
    let mut group = c.benchmark_group("extract");
    group.sample_size(10);
    group.bench_function("circle_r0.5_n4096", |b| {
        let ctx = frame(&circle, 0.5);
        b.iter(|| extract(black_box(&ctx), &ExtractOptions::with_grid(4096)).unwrap())
    });
    group.bench_function("sphere_r0.5_n128", |b| {
        let ctx = frame(&sphere, 0.5);
        b.iter(|| extract(black_box(&ctx), &ExtractOptions::with_grid(128)).unwrap())
    });
    group.bench_function("torus_component_r1", |b| {
        let ctx = frame(&torus, 1.0);
        b.iter(|| component(black_box(&ctx), 1.0 / 64.0).unwrap())
    });
    group.finish();
}

fn bench_radius(c: &mut Criterion) {
    let circle = circle();
    let q = [ParamPoint::new(0, vec![0.0])];
    let mut group = c.benchmark_group("radius");
    group.sample_size(10);
    group.bench_function("circle_c1_lambda0.5_n1024", |b| {
        let opts = RadiusOptions::with_grid(1024);
        b.iter(|| max_radius(&circle, 0.5, PropertyKind::C1, black_box(&q), &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_extract, bench_radius);
criterion_main!(benches);
