use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use tpdc_core::estimate::{fit_var, fit_vma, select_vma};
use tpdc_core::{
    catalog, connectivity, simulate, welch_cross_spectrum, wilson_factorize, FrequencyGrid, WelchConfig, WilsonConfig,
};

fn spectral(c: &mut Criterion) {
    let panel = simulate(&catalog::example2(), 16384, 1, 1000).unwrap();
    let welch = WelchConfig::new(256).unwrap();
    c.bench_function("welch 3ch 16384 samples", |b| {
        b.iter(|| welch_cross_spectrum(black_box(&panel), &welch).unwrap())
    });

    let spectrum = catalog::example2().theoretical_spectrum(&FrequencyGrid::new(512).unwrap()).unwrap();
    c.bench_function("wilson 3ch 512 points", |b| {
        b.iter(|| wilson_factorize(black_box(&spectrum), &WilsonConfig::default()).unwrap())
    });
}

fn parametric(c: &mut Criterion) {
    let panel = simulate(&catalog::example2(), 16384, 2, 1000).unwrap();
    let mut g = c.benchmark_group("fits");
    g.sample_size(10);
    g.bench_function("fit_var p_max=30", |b| b.iter(|| fit_var(black_box(&panel), 30).unwrap()));
    g.bench_function("fit_vma q=2 L=50", |b| b.iter(|| fit_vma(black_box(&panel), 2, 50).unwrap()));
    g.bench_function("select_vma q_max=100 L=50", |b| b.iter(|| select_vma(black_box(&panel), 100, 50).unwrap()));
    g.finish();
}

fn measures(c: &mut Criterion) {
    let factor = catalog::example2().canonical().transfer_function(&FrequencyGrid::new(512).unwrap()).unwrap();
    c.bench_function("total_pdc 3ch 512 points", |b| b.iter(|| connectivity::total_pdc(black_box(&factor)).unwrap()));
    c.bench_function("total_dtf 3ch 512 points", |b| b.iter(|| connectivity::total_dtf(black_box(&factor)).unwrap()));
}

criterion_group!(benches, spectral, parametric, measures);
criterion_main!(benches);
