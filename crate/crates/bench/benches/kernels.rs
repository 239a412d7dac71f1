use std::collections::BTreeMap;

use criterion::{criterion_group, criterion_main, Criterion};
use num_traits::One;
use std::hint::black_box;
use symop_bench::{det_fixture, free_matrix, painleve};
use symop_core::det_eqs::instantiate;
use symop_core::exact::Rational;
use symop_core::killing::solve_free;
use symop_core::lie::{check_row, CheckOptions};
use symop_core::report::parse_potential;
use symop_core::third_order::{ode_integrate, OdeOptions};

fn rref(c: &mut Criterion) {
    let a = free_matrix(2, 2);
    c.bench_function("rref n=2 m=2", |b| b.iter(|| black_box(&a).rref_nullspace()));
}

fn instantiate_system(c: &mut Criterion) {
    let (sys, ansatz, v) = det_fixture(2, 2);
    c.bench_function("instantiate n=2 m=2", |b| {
        b.iter(|| instantiate(black_box(&sys), &ansatz, &v, &Rational::one()).unwrap())
    });
}

fn free_basis(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_free");
    g.sample_size(10);
    g.bench_function("n=1 m=3", |b| b.iter(|| solve_free(1, 3, &Rational::one()).unwrap()));
    g.finish();
}

fn ode(c: &mut Criterion) {
    let f = painleve();
    c.bench_function("ode P214 [0,1]", |b| {
        b.iter(|| ode_integrate(&f, (0.0, 1.0), black_box(&[0.0, 0.0]), &OdeOptions::default()).unwrap())
    });
}

fn lie_row(c: &mut Criterion) {
    let opts = CheckOptions {
        seed: 42,
        ..Default::default()
    };
    let params = BTreeMap::new();
    c.bench_function("check_row 2.8 m=3", |b| b.iter(|| check_row("2.8", 3, &params, &opts).unwrap()));
}

fn parser(c: &mut Criterion) {
    c.bench_function("parse_potential", |b| {
        b.iter(|| parse_potential(black_box("(x1 + x2)^4/x3^2 - 7/3*t*x1^-2 + 0.25"), 3).unwrap())
    });
}

criterion_group!(benches, rref, instantiate_system, free_basis, ode, lie_row, parser);
criterion_main!(benches);
