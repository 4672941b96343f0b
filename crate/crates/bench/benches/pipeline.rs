use std::hint::black_box;

use adiabat_bench::h6_setup;
use adiabat_core::actions::actions_at;
use adiabat_core::hill::integrate_monodromy;
use adiabat_core::quadrature::QuadratureSettings;
use adiabat_core::{band_edges, decompose_window, locate_resonances};
use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;

fn pipeline(c: &mut Criterion) {
    let s = h6_setup(0.1);
    let v = &s.fixture.potential;
    let e = s.fixture.energy;

    c.bench_function("monodromy", |b| {
        b.iter(|| integrate_monodromy(v, black_box(Complex64::new(e, 0.0)), 1e-12).unwrap())
    });
    c.bench_function("band_edges", |b| b.iter(|| band_edges(v, black_box(50.0), 1e-11).unwrap()));
    c.bench_function("decompose_window", |b| {
        b.iter(|| decompose_window(&s.fixture.profile, &s.bands, black_box(e), 1e-12).unwrap())
    });
    let q = QuadratureSettings::default();
    c.bench_function("actions_at", |b| {
        b.iter(|| actions_at(&s.fixture.profile, &s.bands, black_box(e), &q).unwrap())
    });
    let mut g = c.benchmark_group("resonances");
    g.sample_size(10);
    g.bench_function("locate_resonances", |b| {
        b.iter(|| locate_resonances(black_box(&s.solver), &s.fixture.profile, &s.bands).unwrap())
    });
    g.finish();
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
