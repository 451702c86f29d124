//! Benchmarks for lcw-core live in `benches/`.
