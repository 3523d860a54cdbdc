//! Data-parallel map over independent jobs (restarts, reads, sweep points).
//!
//! With the `parallel` feature the work runs on the rayon pool; without it,
//! or when [`Execution::Sequential`] is requested, jobs run in index order on
//! the calling thread. Results are always returned in index order, so outputs
//! do not depend on the execution mode.

/// How independent jobs are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// True when jobs actually run on the thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Evaluates `job(0..count)` and returns the results in index order.
pub fn map_indexed<T, F>(count: usize, mode: Execution, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return (0..count).into_par_iter().map(job).collect();
    }
    let _ = mode;
    (0..count).map(job).collect()
}

/// Fallible variant of [`map_indexed`]; the first error in index order wins.
pub fn try_map_indexed<T, E, F>(count: usize, mode: Execution, job: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_indexed(count, mode, job).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let f = |i: usize| (i * i) as u64 % 7;
        assert_eq!(
            map_indexed(100, Execution::Parallel, f),
            map_indexed(100, Execution::Sequential, f)
        );
    }

    #[test]
    fn first_error_in_order() {
        let r: Result<Vec<usize>, usize> =
            try_map_indexed(10, Execution::Parallel, |i| if i >= 3 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(3));
    }
}
