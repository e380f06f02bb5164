//! Thin dispatch layer between rayon and plain iteration.
//!
//! All data-parallel loops in the crate funnel through these helpers so that
//! builds without the `parallel` feature fall back to sequential execution,
//! and so that `jobs = 1` forces a sequential run even when rayon is linked
//! (used by the benchmarks to compare both paths).

/// Number of worker threads to use; 0 means "let rayon decide".
pub type Jobs = usize;

#[cfg(feature = "parallel")]
pub fn map_collect<T, U, F>(jobs: Jobs, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    if jobs == 1 {
        items.iter().map(f).collect()
    } else {
        items.par_iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, U, F>(_jobs: Jobs, items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Apply `f` to each mutable chunk of `data` of length `chunk`.
#[cfg(feature = "parallel")]
pub fn for_each_chunk_mut<T, F>(jobs: Jobs, data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    use rayon::prelude::*;
    if jobs == 1 {
        data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    } else {
        data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_chunk_mut<T, F>(_jobs: Jobs, data: &mut [T], chunk: usize, f: F)
where
    F: Fn(usize, &mut [T]),
{
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Map over indices 0..n.
pub fn map_indices<U, F>(jobs: Jobs, n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    let idx: Vec<usize> = (0..n).collect();
    map_collect(jobs, &idx, |&i| f(i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let a = map_collect(1, &xs, |x| x * x);
        let b = map_collect(0, &xs, |x| x * x);
        assert_eq!(a, b);
    }

    #[test]
    fn chunks_cover_everything() {
        let mut data = vec![0u32; 64];
        for_each_chunk_mut(0, &mut data, 8, |i, c| {
            for x in c.iter_mut() {
                *x = i as u32 + 1;
            }
        });
        assert!(data.iter().all(|&x| x > 0));
    }
}
