//! Parallel/sequential execution switch.
//!
//! All data-parallel inner loops go through [`map_indexed`] so that the
//! crate builds and behaves identically with `--no-default-features`
//! (sequential) and with the default `parallel` feature (rayon). The
//! explicit [`Parallelism`] argument also lets benchmarks compare the two
//! paths inside one binary.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution strategy for a data-parallel loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    #[cfg(feature = "parallel")]
    Rayon,
}

impl Parallelism {
    /// Default strategy for the active feature set.
    pub fn auto() -> Self {
        #[cfg(feature = "parallel")]
        {
            Parallelism::Rayon
        }
        #[cfg(not(feature = "parallel"))]
        {
            Parallelism::Sequential
        }
    }
}

/// Maps `f` over `0..len`, collecting results in index order. The output
/// is identical for both strategies; only the wall time differs.
pub fn map_indexed<T, F>(mode: Parallelism, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        Parallelism::Sequential => (0..len).map(f).collect(),
        #[cfg(feature = "parallel")]
        Parallelism::Rayon => (0..len).into_par_iter().map(f).collect(),
    }
}

/// Fallible variant of [`map_indexed`]; the first error (in index order
/// for the sequential path, any for rayon) is returned.
pub fn try_map_indexed<T, E, F>(mode: Parallelism, len: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    match mode {
        Parallelism::Sequential => (0..len).map(f).collect(),
        #[cfg(feature = "parallel")]
        Parallelism::Rayon => (0..len).into_par_iter().map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let seq = map_indexed(Parallelism::Sequential, 100, |i| i * i);
        #[cfg(feature = "parallel")]
        {
            let par = map_indexed(Parallelism::Rayon, 100, |i| i * i);
            assert_eq!(seq, par);
        }
        assert_eq!(seq[7], 49);
    }
}
