//! Criterion benchmarks for the filter and training kernels; see `benches/`.
