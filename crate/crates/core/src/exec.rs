//! Map-reduce over a slice, either on the calling thread or on a dedicated
//! rayon pool. Without the `parallel` feature every request runs
//! sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel { workers: usize },
}

impl Execution {
    pub fn from_workers(workers: usize) -> Self {
        if workers <= 1 {
            Execution::Sequential
        } else {
            Execution::Parallel { workers }
        }
    }

    pub fn workers(self) -> usize {
        match self {
            Execution::Sequential => 1,
            Execution::Parallel { workers } => workers,
        }
    }
}

/// Whether this build can actually run [`Execution::Parallel`].
pub const PARALLEL_AVAILABLE: bool = cfg!(feature = "parallel");

/// `items.map(map).reduce(identity, reduce)`.
///
/// `reduce` must be associative; item order is preserved when combining, so
/// it need not be commutative.
pub fn map_reduce<T, A, M, R, I>(items: &[T], exec: Execution, identity: I, map: M, reduce: R) -> A
where
    T: Sync,
    A: Send,
    M: Fn(&T) -> A + Sync + Send,
    R: Fn(A, A) -> A + Sync + Send,
    I: Fn() -> A + Sync + Send,
{
    match exec {
        Execution::Sequential => sequential(items, identity, map, reduce),
        Execution::Parallel { workers } => {
            #[cfg(feature = "parallel")]
            {
                match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                    Ok(pool) => {
                        pool.install(|| items.par_iter().map(&map).reduce(&identity, &reduce))
                    }
                    Err(_) => sequential(items, identity, map, reduce),
                }
            }
            #[cfg(not(feature = "parallel"))]
            {
                let _ = workers;
                sequential(items, identity, map, reduce)
            }
        }
    }
}

fn sequential<T, A>(
    items: &[T],
    identity: impl Fn() -> A,
    map: impl Fn(&T) -> A,
    reduce: impl Fn(A, A) -> A,
) -> A {
    items.iter().fold(identity(), |acc, x| reduce(acc, map(x)))
}
