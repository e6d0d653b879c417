//! Data-parallel mapping with a sequential fallback.
//!
//! With the `parallel` feature (default) the maps run on rayon; without it
//! they run as plain loops. Callers pass item-index closures and derive any
//! randomness from per-item seeds, so the two paths produce identical bytes
//! and `jobs` only changes wall time.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, preserving index order in the output.
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
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

/// Maps `f` over a slice, preserving order.
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
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

/// Runs `f` inside a thread pool of the requested width.
///
/// `None` keeps the process-global pool. With the sequential build the
/// closure just runs in place and the width is ignored.
pub fn run_with_jobs<R, F>(jobs: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        match jobs {
            Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("failed to build thread pool")
                .install(f),
            _ => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_indexed_preserves_order() {
        let squares = map_indexed(100, |i| i * i);
        assert_eq!(squares[7], 49);
        assert_eq!(squares.len(), 100);
    }

    #[test]
    fn jobs_setting_does_not_change_results() {
        let a = run_with_jobs(Some(1), || map_indexed(64, |i| (i as f64).sqrt()));
        let b = run_with_jobs(Some(4), || map_indexed(64, |i| (i as f64).sqrt()));
        assert_eq!(a, b);
    }
}
