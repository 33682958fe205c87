//! Criterion benchmarks for the `mlphillips` crate; see `benches/`.
