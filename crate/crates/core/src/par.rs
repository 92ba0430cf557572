//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature these dispatch to rayon; without it they run
//! the same closures in order. Every helper returns results in index order,
//! so callers that merge the output sequentially get identical bits either
//! way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Whether the crate was built with rayon.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// `(0..len).map(f).collect()`, possibly in parallel.
pub fn map_indices<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Maps over a slice, preserving order.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
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

/// Runs `f(chunk_index, chunk)` over consecutive mutable chunks of `data`.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
}

/// Splits `0..len` into `chunk`-sized ranges.
pub fn chunk_ranges(len: usize, chunk: usize) -> Vec<std::ops::Range<usize>> {
    let chunk = chunk.max(1);
    (0..len.div_ceil(chunk))
        .map(|i| i * chunk..((i + 1) * chunk).min(len))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_indices_preserves_order() {
        let v = map_indices(1000, |i| i * i);
        assert!(v.iter().enumerate().all(|(i, &x)| x == i * i));
    }

    #[test]
    fn chunk_ranges_cover_exactly() {
        let r = chunk_ranges(10, 4);
        assert_eq!(r, vec![0..4, 4..8, 8..10]);
        assert!(chunk_ranges(0, 4).is_empty());
    }

    #[test]
    fn chunks_mut_visits_all() {
        let mut v = vec![0usize; 37];
        for_each_chunk_mut(&mut v, 5, |ci, c| {
            for (j, x) in c.iter_mut().enumerate() {
                *x = ci * 5 + j;
            }
        });
        assert!(v.iter().enumerate().all(|(i, &x)| x == i));
    }
}
