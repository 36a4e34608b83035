//! Execution strategy for data-parallel loops.
//!
//! Every parallel loop in the crate is an indexed map over `0..n` whose
//! results are collected in index order, so the output never depends on the
//! strategy or the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How an indexed batch of independent work items is executed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    /// Rayon work stealing. Falls back to [`Exec::Sequential`] when the
    /// crate is built without the `parallel` feature.
    #[default]
    Parallel,
    Sequential,
}

impl Exec {
    /// True when work will actually be spread across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Evaluates `f(i)` for every `i` in `0..n` and returns the results in
    /// index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
            _ => (0..n).map(f).collect(),
        }
    }

    /// Maps then folds with an associative `combine`. Partial results are
    /// combined in index order.
    pub fn map_reduce<T, F, R>(self, n: usize, identity: T, f: F, combine: R) -> T
    where
        T: Send + Clone,
        F: Fn(usize) -> T + Sync + Send,
        R: Fn(T, T) -> T + Sync + Send,
    {
        self.map(n, f).into_iter().fold(identity, combine)
    }
}
