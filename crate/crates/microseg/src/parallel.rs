//! Data-parallel helpers with a sequential fallback.
//!
//! Batch items, validation images, and sweep configurations are independent,
//! so the hot loops fan out with rayon when the `parallel` feature (default)
//! is enabled. Results are always collected in input order, which keeps
//! floating-point reductions deterministic regardless of worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map in input order, in parallel when the feature allows it.
pub fn ordered_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Map over indices in order, in parallel when the feature allows it.
pub fn ordered_map_indices<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Always-sequential twin of [`ordered_map`], kept public so benchmarks can
/// compare both paths in one build.
pub fn ordered_map_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
