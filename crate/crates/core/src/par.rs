//! Index-scan execution backends.
//!
//! Grid oracles and sampled-pair sweeps all reduce to "evaluate f(i) for
//! i in 0..n and keep the extreme value". The reduction is associative and
//! breaks ties by the smallest index, so the parallel and sequential backends
//! produce bit-identical results. The `parallel` feature (on by default)
//! routes the default entry points through rayon; the sequential backends are
//! always compiled so the bench suite can compare both.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `(index, value)` candidate; smaller value wins, ties go to smaller index.
/// NaN never wins.
fn pick_min(a: (usize, f64), b: (usize, f64)) -> (usize, f64) {
    if b.1.is_nan() {
        return a;
    }
    if a.1.is_nan() {
        return b;
    }
    if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) {
        b
    } else {
        a
    }
}

fn pick_max(a: (usize, f64), b: (usize, f64)) -> (usize, f64) {
    if b.1.is_nan() {
        return a;
    }
    if a.1.is_nan() {
        return b;
    }
    if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
        b
    } else {
        a
    }
}

pub fn scan_min_sequential<F>(n: usize, f: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64 + Sync,
{
    (0..n).map(|i| (i, f(i))).reduce(pick_min)
}

pub fn scan_max_sequential<F>(n: usize, f: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64 + Sync,
{
    (0..n).map(|i| (i, f(i))).reduce(pick_max)
}

#[cfg(feature = "parallel")]
pub fn scan_min_parallel<F>(n: usize, f: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64 + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| (i, f(i)))
        .reduce_with(pick_min)
}

#[cfg(feature = "parallel")]
pub fn scan_max_parallel<F>(n: usize, f: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64 + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| (i, f(i)))
        .reduce_with(pick_max)
}

/// Below this many indices the scheduling overhead outweighs the work, so
/// the default entry points stay sequential (often inside an outer parallel
/// scan). The reduction is identical either way.
pub const PARALLEL_THRESHOLD: usize = 4096;

/// Smallest `f(i)` over `0..n` with its index.
pub fn scan_min<F>(n: usize, f: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64 + Sync,
{
    #[cfg(feature = "parallel")]
    {
        if n >= PARALLEL_THRESHOLD {
            return scan_min_parallel(n, f);
        }
    }
    scan_min_sequential(n, f)
}

/// Largest `f(i)` over `0..n` with its index.
pub fn scan_max<F>(n: usize, f: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64 + Sync,
{
    #[cfg(feature = "parallel")]
    {
        if n >= PARALLEL_THRESHOLD {
            return scan_max_parallel(n, f);
        }
    }
    scan_max_sequential(n, f)
}
