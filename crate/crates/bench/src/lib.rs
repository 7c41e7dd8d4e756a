//! Criterion benchmarks for the annealer live in `benches/`.
