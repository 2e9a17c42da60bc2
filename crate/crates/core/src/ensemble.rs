//! Parallel ensemble execution with schedule-independent results.
//!
//! Each path is a pure function of its stream id, so work can be farmed out
//! to any number of workers; results are collected in stream order before
//! any reduction, which makes every aggregate bit-identical across worker
//! counts.

use rayon::prelude::*;

use crate::error::Result;

/// Run `f(0), f(1), ..., f(n-1)` in parallel and return the results in
/// index order. The first error (by index) wins.
pub fn run_ordered<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(&f)
        .collect::<Vec<Result<T>>>()
        .into_iter()
        .collect()
}

/// Run a closure inside a dedicated pool of `workers` threads
/// (`0` = rayon's default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("failed to build worker pool");
    pool.install(f)
}
