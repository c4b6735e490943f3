//! Parallel/serial execution switch for the simulation runners.
//!
//! With the `parallel` feature (on by default), `map_indexed` fans out over
//! rayon's thread pool; without it, the same call runs sequentially. Both
//! paths collect in index order, so results are identical either way.

/// Apply `f` to `0..n` and collect the results in index order.
#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Apply `f` to `0..n` and collect the results in index order.
#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Sequential counterpart with the same bounds, for the `_serial` runner
/// variants that exist regardless of the feature set.
pub(crate) fn map_indexed_serial<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
