//! Criterion benchmarks for `wg7-core`; see `benches/`.
