//! Benchmarks for the hot paths: partition construction, band norms, atom
//! expansion, mixed kernel norms, and the STFT.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use amk_core::bump::SmoothBump;
use amk_core::fixtures;
use amk_core::gabor::{gaussian_window, stft};
use amk_core::grid::Grid;
use amk_core::kernel::{mixed_norm, MixedNormParams};
use amk_core::modulation::{alpha_mod_norm, atom_expand, atom_reconstruct, ModNormParams};
use amk_core::partition::{build_atoms, build_partition};

fn bench_partition_build(c: &mut Criterion) {
    let grid = Grid::new(1, 16.0, 1024).unwrap();
    c.bench_function("build_partition n=1024 alpha=1/2", |b| {
        b.iter(|| build_partition(black_box(0.5), &grid, 2.0, SmoothBump::reference()).unwrap())
    });
}

fn bench_mod_norm(c: &mut Criterion) {
    let grid = Grid::new(1, 16.0, 256).unwrap();
    let partition = build_partition(0.5, &grid, 2.0, SmoothBump::reference()).unwrap();
    let atoms = build_atoms(&partition, 1.5).unwrap();
    let mut rng = fixtures::rng(1);
    let f = fixtures::random_retained_band_signal(&partition, &atoms, &mut rng);
    c.bench_function("alpha_mod_norm n=256 p=q=1", |b| {
        b.iter(|| alpha_mod_norm(black_box(&f), &partition, ModNormParams::diagonal(1.0)))
    });
}

fn bench_atom_roundtrip(c: &mut Criterion) {
    let grid = Grid::new(1, 16.0, 256).unwrap();
    let partition = build_partition(0.5, &grid, 2.0, SmoothBump::reference()).unwrap();
    let atoms = build_atoms(&partition, 1.5).unwrap();
    let mut rng = fixtures::rng(2);
    let f = fixtures::random_retained_band_signal(&partition, &atoms, &mut rng);
    c.bench_function("atom expand+reconstruct n=256", |b| {
        b.iter(|| {
            let coeffs = atom_expand(black_box(&f), &partition, &atoms, 1.0).unwrap();
            atom_reconstruct(&coeffs, &atoms).unwrap()
        })
    });
}

fn bench_mixed_norm(c: &mut Criterion) {
    let grid = Grid::new(1, 16.0, 128).unwrap();
    let partition = build_partition(0.0, &grid, 2.0, SmoothBump::reference()).unwrap();
    let atoms = build_atoms(&partition, 1.5).unwrap();
    let kernel = fixtures::random_band_kernel(&partition, &atoms, 3).unwrap();
    c.bench_function("mixed_norm c1 n=128", |b| {
        b.iter(|| mixed_norm(black_box(&kernel), &partition, MixedNormParams::boundedness(1.0, 1.0, 0.0)).unwrap())
    });
}

fn bench_stft(c: &mut Criterion) {
    let grid = Grid::new(1, 16.0, 256).unwrap();
    let window = gaussian_window(&grid, 1.0);
    let partition = build_partition(0.0, &grid, 2.0, SmoothBump::reference()).unwrap();
    let atoms = build_atoms(&partition, 1.5).unwrap();
    let mut rng = fixtures::rng(4);
    let f = fixtures::random_retained_band_signal(&partition, &atoms, &mut rng);
    c.bench_function("stft full grid n=256", |b| {
        b.iter(|| stft(black_box(&f), &window).unwrap())
    });
}

criterion_group!(
    benches,
    bench_partition_build,
    bench_mod_norm,
    bench_atom_roundtrip,
    bench_mixed_norm,
    bench_stft
);
criterion_main!(benches);
