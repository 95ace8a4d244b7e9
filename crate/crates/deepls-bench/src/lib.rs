//! Placeholder library; the crate exists for its criterion benchmarks.
