//! Criterion benchmarks for the mnklab kernels; see `benches/`.
