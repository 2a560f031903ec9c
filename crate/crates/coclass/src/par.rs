//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the heavy inner loops fan out via
//! rayon; without it they degrade to plain iterators. A runtime switch lets
//! benchmarks and the CLI force the sequential path inside a parallel build,
//! so the two can be compared in one binary.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Force the sequential code path even when compiled with `parallel`.
pub fn set_sequential(seq: bool) {
    FORCE_SEQUENTIAL.store(seq, Ordering::Relaxed);
}

pub fn is_sequential() -> bool {
    FORCE_SEQUENTIAL.load(Ordering::Relaxed)
}

/// Maps `f` over `items`, preserving order.
#[cfg(feature = "parallel")]
pub fn map_collect<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    if is_sequential() {
        items.into_iter().map(f).collect()
    } else {
        items.into_par_iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// `any` over a u64 range.
#[cfg(feature = "parallel")]
pub fn range_any<F>(range: std::ops::Range<u64>, f: F) -> bool
where
    F: Fn(u64) -> bool + Sync + Send,
{
    use rayon::prelude::*;
    if is_sequential() {
        range.into_iter().any(f)
    } else {
        range.into_par_iter().any(f)
    }
}

#[cfg(not(feature = "parallel"))]
pub fn range_any<F>(range: std::ops::Range<u64>, f: F) -> bool
where
    F: Fn(u64) -> bool,
{
    range.into_iter().any(f)
}
