//! Throughput of assembly, operator application, field evaluation and the
//! eigenvalue oracle.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fraclayer::{eval_potential, funk_hecke_table, BoundaryOperator, Density};
use fraclayer_bench::unit_sphere;

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble");
    group.sample_size(10);
    for nlat in [12, 16] {
        let mesh = unit_sphere(nlat);
        group.bench_with_input(BenchmarkId::from_parameter(nlat), &mesh, |b, mesh| {
            b.iter(|| BoundaryOperator::assemble(black_box(mesh), 1.5).unwrap())
        });
    }
    group.finish();
}

fn apply(c: &mut Criterion) {
    let mesh = unit_sphere(16);
    let op = BoundaryOperator::assemble(&mesh, 1.5).unwrap();
    let phi = Density::from_fn(&mesh, |p, _| 1.0 + p[2]);
    c.bench_function("apply/16", |b| b.iter(|| op.apply(black_box(&phi)).unwrap()));
}

fn field(c: &mut Criterion) {
    let mesh = unit_sphere(16);
    let phi = Density::constant(&mesh, 1.0);
    let points: Vec<_> = (0..64).map(|k| [0.0, 0.0, 1.5 + 0.1 * k as f64]).collect();
    c.bench_function("field/64-points", |b| {
        b.iter(|| eval_potential(&mesh, black_box(&phi), 0.75, &points).unwrap())
    });
}

fn eigenvalues(c: &mut Criterion) {
    c.bench_function("funk-hecke/lmax-40", |b| b.iter(|| funk_hecke_table(black_box(1.5), 40).unwrap()));
}

criterion_group!(benches, assembly, apply, field, eigenvalues);
criterion_main!(benches);
