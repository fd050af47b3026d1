//! Data-parallel map over independent protocol sessions.
//!
//! With the `parallel` feature the work runs on the rayon pool unless
//! [`set_sequential`] has been switched on; without the feature it is a
//! plain loop.

use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::Result;

static SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Force the sequential path at runtime (used by benchmarks).
pub fn set_sequential(on: bool) {
    SEQUENTIAL.store(on, Ordering::SeqCst);
}

/// Cap concurrent sessions at `n`; 1 means sequential. Only the first call
/// can size the global pool.
pub fn set_threads(n: usize) -> Result<()> {
    if n == 0 {
        return Err(crate::Error::Precondition("thread count must be at least 1".into()));
    }
    set_sequential(n == 1);
    #[cfg(feature = "parallel")]
    if n > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| crate::Error::Precondition(e.to_string()))?;
    }
    Ok(())
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !SEQUENTIAL.load(Ordering::SeqCst)
}

/// Apply `f` to every item, keeping order; the first error wins.
pub fn try_map<T, U, F>(items: Vec<T>, f: F) -> Result<Vec<U>>
where
    T: Send,
    U: Send,
    F: Fn(T) -> Result<U> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return items.into_par_iter().map(f).collect();
    }
    items.into_iter().map(f).collect()
}
