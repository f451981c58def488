//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the maps below fan out over
//! rayon's global pool; without it they run as ordinary loops. Either
//! way results come back in index order, and because every task seeds
//! its own RNG stream (see [`crate::seeds`]), outputs are identical in
//! both modes.

use crate::error::Result;

/// Caps rayon's global pool from the `SENTRY_THREADS` environment
/// variable. Call once, early; later calls are ignored (building the
/// global pool twice is an error in rayon, which we swallow).
pub fn init_thread_cap_from_env() {
    #[cfg(feature = "parallel")]
    {
        if let Ok(v) = std::env::var("SENTRY_THREADS") {
            if let Ok(n) = v.trim().parse::<usize>() {
                if n >= 1 {
                    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                }
            }
        }
    }
}

/// Maps `f` over `0..n`, collecting results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Fallible version of [`map_indexed`]; the first error wins.
pub fn try_map_indexed<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
