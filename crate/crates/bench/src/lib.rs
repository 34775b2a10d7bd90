//! Criterion benchmarks for the spectral and semiclassical engines; see `benches/engines.rs`.
