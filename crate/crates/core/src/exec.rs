//! Data-parallel sweep helpers with a sequential fallback.
//!
//! `map_indexed` fans a per-sample closure out over a rayon pool when the
//! `parallel` feature is enabled and degrades to a plain loop otherwise.
//! Results always come back in index order, and callers reduce them
//! sequentially, so sweep outputs are bitwise deterministic regardless of
//! thread count. `map_indexed_seq` is the always-sequential variant kept
//! public so benchmarks can compare the two code paths in one build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Sequential reference implementation of [`map_indexed`].
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Index-order maximum of `(value, payload)` pairs; ties keep the earliest
/// payload, so the argmax is reproducible.
pub fn max_by_value<P: Clone>(items: &[(f64, P)]) -> Option<(f64, P)> {
    let mut best: Option<(f64, P)> = None;
    for (v, p) in items {
        match &best {
            Some((bv, _)) if *v <= *bv => {}
            _ => best = Some((*v, p.clone())),
        }
    }
    best
}
