//! Benchmark harness crate; the measurements live in `benches/estimators.rs`.
