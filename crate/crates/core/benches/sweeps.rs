//! Grid-sweep benchmarks: the data-parallel execution path against the
//! sequential fallback on the same workloads.
//!
//! `exec::map_indexed` dispatches to rayon when the `parallel` feature is on
//! (the default) and to a plain loop otherwise, while `map_indexed_seq` is
//! always sequential. Benchmarking both on one build therefore shows the
//! speedup the feature buys; building with `--no-default-features` pins both
//! to the sequential code path and should show parity.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use twistor_core::corpus;
use twistor_core::exec;
use twistor_core::lift::{defect_sweep, LagrangianPatch};
use twistor_core::surface::superminimality_sweep_seq;
use twistor_core::twistor::{HermitianPack, HermitianSign};

fn superminimality(c: &mut Criterion) {
    let mut group = c.benchmark_group("superminimality-sweep");
    for grid in [12usize, 20] {
        let surface = corpus::entry("veronese")
            .unwrap()
            .build_with_grid([grid, grid])
            .unwrap();
        group.bench_with_input(BenchmarkId::new("dispatched", grid), &surface, |b, s| {
            b.iter(|| s.superminimality_sweep().unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", grid), &surface, |b, s| {
            b.iter(|| superminimality_sweep_seq(s).unwrap())
        });
    }
    group.finish();
}

fn lagrangian_defect(c: &mut Criterion) {
    let mut group = c.benchmark_group("lagrangian-defect-sweep");
    group.sample_size(10);
    let surface = corpus::entry("graph_z2")
        .unwrap()
        .build_with_grid([10, 10])
        .unwrap();
    let patch = LagrangianPatch::build(surface, 8).unwrap();
    let packs = [
        HermitianPack::new(0.5, HermitianSign::Plus).unwrap(),
        HermitianPack::new(1.0, HermitianSign::Minus).unwrap(),
    ];
    group.bench_function("dispatched", |b| {
        b.iter(|| defect_sweep(&patch, &packs).unwrap())
    });
    group.finish();
}

fn raw_map(c: &mut Criterion) {
    let mut group = c.benchmark_group("map-indexed");
    let work = |i: usize| {
        let mut acc = 0.0_f64;
        for k in 0..400 {
            acc += ((i * 31 + k) as f64).sin().abs().sqrt();
        }
        acc
    };
    group.bench_function("dispatched", |b| b.iter(|| exec::map_indexed(4096, work)));
    group.bench_function("sequential", |b| b.iter(|| exec::map_indexed_seq(4096, work)));
    group.finish();
}

criterion_group!(benches, superminimality, lagrangian_defect, raw_map);
criterion_main!(benches);
