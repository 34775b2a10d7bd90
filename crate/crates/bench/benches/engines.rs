use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use harperband::actions::edge_weights;
use harperband::classical::{reeb_graph, separatrix_graph};
use harperband::quantum::{band_structure, spectrum_at, FluxContext, KGrid, Quasimomentum};
use harperband::regular_bs::all_flat_bands;
use harperband::singular_bs::{generic_roots, Conventions, SeparatrixData};
use harperband::TrigSymbol;

fn bloch_spectrum(c: &mut Criterion) {
    let s = TrigSymbol::harper(1.0);
    let mut g = c.benchmark_group("bloch_spectrum");
    for eta in [32usize, 64, 128] {
        let flux = FluxContext::new(eta).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(eta), &flux, |b, &flux| {
            b.iter(|| spectrum_at(black_box(&s), flux, Quasimomentum::new(0.3, -0.7)).unwrap())
        });
    }
    g.finish();
}

fn bands(c: &mut Criterion) {
    let s = TrigSymbol::harper(0.5);
    let flux = FluxContext::new(64).unwrap();
    let mut g = c.benchmark_group("band_structure");
    g.sample_size(10);
    g.bench_function("eta64_8x8", |b| b.iter(|| band_structure(black_box(&s), flux, KGrid::square(8)).unwrap()));
    g.finish();
}

fn separatrix(c: &mut Criterion) {
    let s = TrigSymbol::harper(0.5);
    let graph = separatrix_graph(&s, 1.0).unwrap();
    c.bench_function("edge_weights_harper", |b| b.iter(|| edge_weights(black_box(&s), &graph).unwrap()));

    let weights = edge_weights(&s, &graph).unwrap();
    let data = SeparatrixData::new(&graph, &weights).unwrap();
    let h = std::f64::consts::TAU / 128.0;
    let conv = Conventions::default();
    c.bench_function("generic_roots_y", |b| {
        b.iter(|| generic_roots(black_box(&data), &conv, (0.0, 0.0), h, 5.0))
    });
}

fn regular(c: &mut Criterion) {
    let s = TrigSymbol::harper(0.5);
    let reeb = reeb_graph(&s).unwrap();
    let flux = FluxContext::new(128).unwrap();
    c.bench_function("flat_bands_harper", |b| b.iter(|| all_flat_bands(black_box(&s), &reeb, flux).unwrap()));
}

criterion_group!(benches, bloch_spectrum, bands, separatrix, regular);
criterion_main!(benches);
