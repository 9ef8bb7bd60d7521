use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;
use tangent_graphs::{make_admissible_isometry, subspace_graph_matrix, Matrix, Subspace, Vector};

fn plane(n: usize, m: usize) -> Subspace {
    let cols = Matrix::from_fn(n, m, |i, j| if i == j { 1.0 } else { 0.1 * (i + 2 * j) as f64 });
    Subspace::from_spanning(&cols).unwrap()
}

fn bench_geometry(c: &mut Criterion) {
    let mut group = c.benchmark_group("geometry");
    for (n, m) in [(3, 2), (8, 4)] {
        let e = plane(n, m);
        let base = Vector::from_element(n, 0.5);
        group.bench_function(format!("admissible_isometry_{n}x{m}"), |b| {
            b.iter(|| make_admissible_isometry(black_box(&base), black_box(&e)))
        });
        group.bench_function(format!("graph_matrix_{n}x{m}"), |b| {
            b.iter_batched(|| e.clone(), |e| subspace_graph_matrix(&e), BatchSize::SmallInput)
        });
        let other = plane(n, m).transformed(&make_admissible_isometry(&base, &e).rotation().clone());
        group.bench_function(format!("principal_angles_{n}x{m}"), |b| {
            b.iter(|| black_box(&e).principal_angles(black_box(&other)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_geometry);
criterion_main!(benches);
