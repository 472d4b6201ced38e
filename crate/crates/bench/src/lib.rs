//! Benchmarks live in `benches/`; this crate only hosts them.

use primstab::TraceTriple;

/// Points of the diagonal slice `t ↦ (t, t, t)` along a horizontal line.
pub fn diagonal_row(im: f64, n: usize) -> Vec<TraceTriple> {
    (0..n)
        .map(|i| {
            let re = -3.0 + 6.0 * (i as f64 + 0.5) / n as f64;
            let t = primstab::Complex64::new(re, im);
            TraceTriple::new(t, t, t)
        })
        .collect()
}
