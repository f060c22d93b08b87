//! Criterion benchmarks for padpipe live in `benches/`.
