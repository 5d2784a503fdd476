//! Index-ordered data parallelism.
//!
//! Every parallel loop in the crate goes through [`map_indexed`], which
//! returns results in index order. Reductions are done sequentially over
//! that vector, so floating-point results do not depend on the number of
//! worker threads. Without the `parallel` feature the same functions run
//! sequentially.

/// Evaluates `f(0), f(1), ..., f(n - 1)` and returns the results in order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_sequential(n, f)
}

/// Sequential reference path, always available (benchmarks compare against it).
pub fn map_indexed_sequential<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Runs `f` with at most `workers` threads. `None` uses the global pool.
///
/// With the `parallel` feature disabled this simply calls `f`.
#[cfg(feature = "parallel")]
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        None => f(),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .expect("failed to build worker pool");
            pool.install(f)
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<R: Send>(_workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    f()
}

/// Number of threads the current context would use.
pub fn current_workers() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_results_independent_of_pool_size() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let one = with_workers(Some(1), || map_indexed(1000, f));
        let four = with_workers(Some(4), || map_indexed(1000, f));
        assert_eq!(one, four);
        assert_eq!(one, map_indexed_sequential(1000, f));
    }
}
