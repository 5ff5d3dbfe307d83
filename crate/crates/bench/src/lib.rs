//! Criterion benchmarks for `latangle-core`: `cargo bench -p latangle-bench`.
