//! Benchmarks live in benches/suites.rs.
