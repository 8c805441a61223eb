//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) [`map_collect`] fans work out over
//! the rayon pool; without it the same call runs sequentially. Outputs are
//! collected in input order either way, so results never depend on thread
//! scheduling. Reductions over floats should go through the collected
//! vector and fold sequentially for the same reason.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, preserving order.
#[cfg(feature = "parallel")]
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// Map `f` over `items`, preserving order.
#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Always-sequential variant, kept callable regardless of features so the
/// bench suite can compare both paths in one build.
pub fn map_collect_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
