use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ncdomain::berezin::{build_kernel_with_table, transform, transform_resolvent};
use ncdomain::coefficients::weights_recursive;
use ncdomain::dilation::{dilate, DilationOptions};
use ncdomain::fock::build_left_model;
use ncdomain::variety::{constraint_subspace, symmetric_basis, ConstraintSet};
use ncdomain_bench::{drury, member, nonlinear};

fn weights(c: &mut Criterion) {
    let mut group = c.benchmark_group("weights_recursive");
    for (name, f, m, len) in [("drury2", drury(2), 2, 10), ("drury3", drury(3), 2, 7), ("nonlinear", nonlinear(), 3, 10)] {
        group.bench_with_input(BenchmarkId::new(name, len), &len, |b, &len| {
            b.iter(|| weights_recursive(black_box(&f), m, len).unwrap())
        });
    }
    group.finish();
}

fn kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("berezin");
    let f = drury(2);
    let t = member(&f, 1, 4, 0.1, 1);
    for len in [6, 8] {
        let table = weights_recursive(&f, 1, len).unwrap();
        group.bench_with_input(BenchmarkId::new("build_kernel", len), &table, |b, table| {
            b.iter(|| build_kernel_with_table(black_box(table), &t).unwrap())
        });
        let g = build_left_model(&table)[0].mul(&build_left_model(&table)[1].adjoint());
        let k = build_kernel_with_table(&table, &t).unwrap();
        group.bench_with_input(BenchmarkId::new("transform", len), &len, |b, _| {
            b.iter(|| transform(black_box(&k), &g).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("transform_resolvent", len), &len, |b, _| {
            b.iter(|| transform_resolvent(black_box(&table), &t, &g).unwrap())
        });
    }
    group.finish();
}

fn subspaces(c: &mut Criterion) {
    let mut group = c.benchmark_group("variety");
    group.sample_size(20);
    let q = ConstraintSet::commutators(2);
    for len in [4, 6] {
        let table = weights_recursive(&nonlinear(), 2, len).unwrap();
        group.bench_with_input(BenchmarkId::new("constraint_subspace", len), &table, |b, table| {
            b.iter(|| constraint_subspace(black_box(table), &q).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("symmetric_basis", len), &table, |b, table| {
            b.iter(|| symmetric_basis(black_box(table)))
        });
    }
    group.finish();
}

fn dilation(c: &mut Criterion) {
    let mut group = c.benchmark_group("dilate");
    group.sample_size(10);
    let f = drury(2);
    let t = member(&f, 1, 3, 0.02, 2);
    let q = ConstraintSet::empty(2);
    group.bench_function("pure_row_contraction", |b| {
        b.iter(|| dilate(&f, 1, black_box(&t), &q, &DilationOptions::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, weights, kernel, subspaces, dilation);
criterion_main!(benches);
