//! Column-parallel helpers.
//!
//! With the `parallel` feature the helpers fan work out over rayon; the
//! [`set_parallel`] switch turns that off at runtime so both paths can be
//! compared inside one binary. Every helper computes each output column
//! independently, so results do not depend on the thread count.

use std::sync::atomic::{AtomicBool, Ordering};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

static ENABLED: AtomicBool = AtomicBool::new(true);

/// Enables or disables parallel execution at runtime.
pub fn set_parallel(enabled: bool) {
    ENABLED.store(enabled, Ordering::Relaxed);
}

/// True when work is currently dispatched to the rayon pool.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel") && ENABLED.load(Ordering::Relaxed)
}

/// Runs `f` over disjoint column chunks of a column-major buffer with `rows` rows.
pub(crate) fn for_each_column<T, F>(data: &mut [T], rows: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    if rows == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    if parallel_enabled() && data.len() / rows > 1 {
        data.par_chunks_mut(rows).enumerate().for_each(|(j, c)| f(j, c));
        return;
    }
    data.chunks_mut(rows).enumerate().for_each(|(j, c)| f(j, c));
}
