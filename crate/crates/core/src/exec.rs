//! Execution policy for the data-parallel kernels.
//!
//! Kernels are written once against [`Exec`]; with the `parallel` feature the
//! parallel policy runs on a rayon pool, without it every policy runs on the
//! calling thread. Results never depend on the policy: work items carry their
//! own seeds and reductions are commutative.

use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    /// Run on the calling thread.
    Sequential,
    /// Run on the global rayon pool (machine parallelism).
    #[default]
    Parallel,
    /// Run on a dedicated pool of exactly this many threads.
    Threads(usize),
}

impl Exec {
    pub fn from_threads(threads: Option<usize>) -> Self {
        match threads {
            Some(1) => Exec::Sequential,
            Some(n) if n > 1 => Exec::Threads(n),
            _ => Exec::Parallel,
        }
    }

    /// Maps every index of `range` through `f`, preserving order.
    pub fn map_collect<T, F>(self, range: Range<u64>, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => range.map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                range.into_par_iter().map(f).collect()
            }
            #[cfg(feature = "parallel")]
            Exec::Threads(n) => with_pool(n, || {
                use rayon::prelude::*;
                range.into_par_iter().map(f).collect()
            }),
            #[cfg(not(feature = "parallel"))]
            _ => range.map(f).collect(),
        }
    }

    /// Folds every index of `range` into an accumulator and merges the
    /// partial accumulators with `merge`, which must be commutative and
    /// associative.
    pub fn fold_reduce<A, I, F, M>(self, range: Range<u64>, init: I, fold: F, merge: M) -> A
    where
        A: Send,
        I: Fn() -> A + Sync + Send,
        F: Fn(A, u64) -> A + Sync + Send,
        M: Fn(A, A) -> A + Sync + Send,
    {
        match self {
            Exec::Sequential => range.fold(init(), fold),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                range.into_par_iter().fold(&init, &fold).reduce(&init, &merge)
            }
            #[cfg(feature = "parallel")]
            Exec::Threads(n) => with_pool(n, || {
                use rayon::prelude::*;
                range.into_par_iter().fold(&init, &fold).reduce(&init, &merge)
            }),
            #[cfg(not(feature = "parallel"))]
            _ => {
                let _ = &merge;
                range.fold(init(), fold)
            }
        }
    }
}

#[cfg(feature = "parallel")]
fn with_pool<R: Send>(threads: usize, op: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(op),
        Err(_) => op(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree() {
        let f = |i: u64| i * i % 7;
        let seq = Exec::Sequential.map_collect(0..1000, f);
        assert_eq!(seq, Exec::Parallel.map_collect(0..1000, f));
        assert_eq!(seq, Exec::Threads(3).map_collect(0..1000, f));

        let total = |e: Exec| e.fold_reduce(0..1000, || 0u64, |a, i| a + f(i), |a, b| a + b);
        assert_eq!(total(Exec::Sequential), total(Exec::Parallel));
        assert_eq!(total(Exec::Sequential), total(Exec::Threads(2)));
    }

    #[test]
    fn thread_count_mapping() {
        assert_eq!(Exec::from_threads(None), Exec::Parallel);
        assert_eq!(Exec::from_threads(Some(1)), Exec::Sequential);
        assert_eq!(Exec::from_threads(Some(4)), Exec::Threads(4));
    }
}
