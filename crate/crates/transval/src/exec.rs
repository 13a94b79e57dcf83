//! Index-deterministic work mapping.
//!
//! Everything parallel in this crate runs through [`map_indexed`]: results
//! land in a slot vector keyed by work index, so output never depends on
//! completion order or worker count. With the `parallel` feature disabled,
//! parallel modes degrade to the sequential path with identical results.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    /// Run on a rayon pool; `workers == 0` means the default pool size.
    Parallel { workers: usize },
}

impl ExecMode {
    pub fn parallel() -> Self {
        ExecMode::Parallel { workers: 0 }
    }

    /// Interpret a worker-count knob: 1 means sequential, otherwise a pool
    /// of that many threads (0 = default size).
    pub fn with_workers(workers: usize) -> Self {
        if workers == 1 {
            ExecMode::Sequential
        } else {
            ExecMode::Parallel { workers }
        }
    }
}

/// Apply `f` to every index in `0..count`, collecting results in index order.
pub fn map_indexed<T, F>(mode: ExecMode, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        ExecMode::Sequential => map_indexed_seq(count, f),
        ExecMode::Parallel { workers } => map_indexed_par(count, workers, f),
    }
}

pub fn map_indexed_seq<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}

#[cfg(feature = "parallel")]
fn map_indexed_par<T, F>(count: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if workers == 0 {
        (0..count).into_par_iter().map(f).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("failed to build worker pool");
        pool.install(|| (0..count).into_par_iter().map(f).collect())
    }
}

#[cfg(not(feature = "parallel"))]
fn map_indexed_par<T, F>(count: usize, _workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_seq(count, f)
}
