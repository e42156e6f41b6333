//! Execution strategy for the data-parallel loops (sampling batches, sweep
//! trials). Every parallel loop is indexed, and each index owns its own RNG
//! stream, so the two strategies produce bit-identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "POLYPACK_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential execution when built without `parallel`.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Maps `f` over `0..count`, returning results in index order.
    pub fn map<T, F>(self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..count).into_par_iter().map(f).collect(),
            _ => (0..count).map(f).collect(),
        }
    }
}

/// Reads [`THREADS_ENV`] and sizes the global pool accordingly. Returns the
/// configured count, if any. A no-op without the `parallel` feature.
pub fn configure_threads_from_env() -> Option<usize> {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)?;
    #[cfg(feature = "parallel")]
    {
        // build_global fails if a pool already exists; that pool stays in use.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    Some(threads)
}
