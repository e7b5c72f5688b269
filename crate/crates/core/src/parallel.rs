//! Data-parallel map over independent tasks (multi-starts, decoding orders,
//! stream collections, Monte-Carlo trials).
//!
//! Without the `parallel` feature every call runs sequentially. Output order
//! always matches input order, so results never depend on scheduling.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether tasks actually run on the rayon pool in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

#[cfg(feature = "parallel")]
pub fn map<T, R, F>(exec: Execution, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Send + Sync,
{
    use rayon::prelude::*;
    match exec {
        Execution::Parallel => items.into_par_iter().map(f).collect(),
        Execution::Sequential => items.into_iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(_exec: Execution, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Send + Sync,
{
    items.into_iter().map(f).collect()
}

/// Runs `f` inside a pool of `threads` workers (the global pool when `None`).
#[cfg(feature = "parallel")]
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(f),
            Err(e) => {
                log::warn!("could not build a {n}-thread pool ({e}); using the global pool");
                f()
            }
        },
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<R: Send>(_threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..100).collect();
        let a = map(Execution::Parallel, items.clone(), |x| x * x);
        let b = map(Execution::Sequential, items, |x| x * x);
        assert_eq!(a, b);
    }
}
