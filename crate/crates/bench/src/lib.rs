//! Benchmarks for the verification toolkit live under `benches/`.
