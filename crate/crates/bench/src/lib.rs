//! Criterion benchmarks for `ecopo-core`; the benchmarks live in `benches/`.
