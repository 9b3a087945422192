//! Criterion benchmarks for the hot kernels: exact coset sums, the
//! second-moment pipeline, walk counts and per-lift counting. Run with
//! `cargo bench -p lift-moments-bench`.
