// Benchmarks live in benches/engine.rs; this crate exports nothing.
