//! Fork-join worker configuration.
//!
//! Worker count never changes results: the recursive algorithms fork on a
//! fixed split tree, so the combine order is identical whether subtrees run
//! serially or in parallel.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Below this many elements a recursion stops forking; the sequential tail
/// dominates cache behavior anyway.
pub(crate) const PAR_MIN: usize = 1 << 15;

/// Worker count requested via the `FNORM_WORKERS` environment variable,
/// read once per process; absent, empty or unparsable values mean 1.
pub fn default_workers() -> usize {
    static WORKERS: OnceLock<usize> = OnceLock::new();
    *WORKERS.get_or_init(|| {
        std::env::var("FNORM_WORKERS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&w| w >= 1)
            .unwrap_or(1)
    })
}

/// Run `f` inside a cached rayon pool of the given size; `workers <= 1`
/// runs it on the calling thread with no pool involved.
pub(crate) fn run_with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers <= 1 {
        return f();
    }
    pool(workers).install(f)
}

fn pool(workers: usize) -> Arc<rayon::ThreadPool> {
    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<rayon::ThreadPool>>>> = OnceLock::new();
    let pools = POOLS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut pools = pools.lock().expect("worker pool registry poisoned");
    pools
        .entry(workers)
        .or_insert_with(|| {
            Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .expect("failed to build worker pool"),
            )
        })
        .clone()
}
