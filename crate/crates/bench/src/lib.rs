//! Criterion benchmarks for the encoder and the simulator; see `benches/`.
