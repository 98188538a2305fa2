//! Execution helpers: data-parallel maps with a sequential fallback.
//!
//! With the `parallel` feature (default) the maps run on the rayon global
//! pool; without it they run on plain iterators. Each element is computed
//! independently from its index, so both paths produce bit-identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..len`, collecting results in index order.
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
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

/// Sequential variant of [`map_indexed`], kept available under every feature
/// combination so benchmarks can compare the two paths directly.
pub fn map_indexed_seq<T, F>(len: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..len).map(f).collect()
}

/// Mutate disjoint rows of a flat row-major buffer in parallel.
///
/// `buf.len()` must equal `rows * row_len`.
pub fn for_each_row<T, F>(buf: &mut [T], row_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    assert_eq!(buf.len() % row_len, 0);
    #[cfg(feature = "parallel")]
    {
        buf.par_chunks_mut(row_len)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        buf.chunks_mut(row_len).enumerate().for_each(|(i, row)| f(i, row));
    }
}
