//! Indexed map helpers with a data-parallel fast path.
//!
//! Results are always assembled in index order, so the parallel and
//! sequential paths produce identical output for identical inputs.  The
//! sequential functions stay compiled under every feature set; they are
//! the fallback build and the benchmark baseline.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..count`, collecting results in index order.
pub fn indexed_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        indexed_map_sequential(count, f)
    }
}

/// Sequential twin of [`indexed_map`].
pub fn indexed_map_sequential<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}

/// First `Some` produced over `0..count`, by index order.
pub fn find_first_map<T, F>(count: usize, f: F) -> Option<T>
where
    T: Send,
    F: Fn(usize) -> Option<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..count).into_par_iter().find_map_first(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        find_first_map_sequential(count, f)
    }
}

/// Sequential twin of [`find_first_map`].
pub fn find_first_map_sequential<T, F>(count: usize, f: F) -> Option<T>
where
    F: Fn(usize) -> Option<T>,
{
    (0..count).find_map(f)
}

/// Execution strategy selector for callers that expose both paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Parallel when the feature is enabled, sequential otherwise.
    Auto,
    /// Always sequential.
    Sequential,
}

pub fn indexed_map_mode<T, F>(mode: Mode, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        Mode::Auto => indexed_map(count, f),
        Mode::Sequential => indexed_map_sequential(count, f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let out = indexed_map(100, |i| i * i);
        assert_eq!(out, indexed_map_sequential(100, |i| i * i));
    }

    #[test]
    fn first_match_wins() {
        let hit = find_first_map(100, |i| if i % 7 == 3 { Some(i) } else { None });
        assert_eq!(hit, Some(3));
    }
}
