//! Conditional data parallelism.
//!
//! `map_ordered` is the one primitive the evaluation and analysis hot loops
//! use: a pure map over a slice whose output order always matches the input
//! order, so results (and every byte derived from them) are identical whether
//! the map ran on rayon or on the current thread.
//!
//! With the `parallel` feature disabled the rayon dependency disappears and
//! every call runs sequentially regardless of the `parallel` argument.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn map_ordered<T, U, F>(items: &[T], parallel: bool, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_ordered<T, U, F>(items: &[T], _parallel: bool, f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_in_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let seq = map_ordered(&xs, false, |x| x * x);
        let par = map_ordered(&xs, true, |x| x * x);
        assert_eq!(seq, par);
        assert_eq!(seq[10], 100);
    }
}
