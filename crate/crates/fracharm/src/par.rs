//! Data-parallel helpers with a deterministic sequential fallback.
//!
//! With the `parallel` feature, `map` fans out over rayon but always returns
//! results in index order, so any reduction done afterwards is bitwise
//! identical to the sequential build. `force_sequential` lets benches and
//! tests compare both paths inside one binary.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQ: AtomicBool = AtomicBool::new(false);

pub fn force_sequential(on: bool) {
    FORCE_SEQ.store(on, Ordering::SeqCst);
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQ.load(Ordering::Relaxed)
}

/// Evaluate `f(0..n)` and return the values in index order.
pub fn map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Fixed-order sum of `f(i)`; the terms are evaluated in parallel.
pub fn sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map(n, f).iter().sum()
}

/// Map over a slice, order preserving.
pub fn map_slice<A, T, F>(xs: &[A], f: F) -> Vec<T>
where
    A: Sync,
    T: Send,
    F: Fn(&A) -> T + Sync + Send,
{
    map(xs.len(), |i| f(&xs[i]))
}
