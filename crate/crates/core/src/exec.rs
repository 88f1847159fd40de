//! Chunked map/reduce over sample rows.
//!
//! Rows are split into fixed-size chunks, each chunk is mapped independently
//! (on the rayon pool when [`Execution::Parallel`] is selected and the
//! `parallel` feature is on), and the partial results are folded in chunk
//! order on the calling thread. Chunk boundaries never depend on the thread
//! count, so both execution modes produce bitwise-identical results.

use std::ops::Range;

/// Rows per work unit.
pub const CHUNK_ROWS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Splits `0..len` into consecutive ranges of at most `chunk` elements.
pub fn chunk_ranges(len: usize, chunk: usize) -> Vec<Range<usize>> {
    assert!(chunk > 0);
    (0..len)
        .step_by(chunk)
        .map(|start| start..(start + chunk).min(len))
        .collect()
}

/// Maps every range independently, returning results in range order.
pub fn map_ranges<T, F>(ranges: &[Range<usize>], exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            ranges.par_iter().cloned().map(f).collect()
        }
        _ => ranges.iter().cloned().map(f).collect(),
    }
}

/// Maps each index of `0..len` independently, returning results in index order.
pub fn map_indices<T, F>(len: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..len).into_par_iter().map(f).collect()
        }
        _ => (0..len).map(f).collect(),
    }
}

/// Maps chunks of `0..rows` and folds the partial results in chunk order.
pub fn chunked_fold<T, F, G>(rows: usize, exec: Execution, map: F, mut fold: G) -> Option<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
    G: FnMut(T, T) -> T,
{
    let ranges = chunk_ranges(rows, CHUNK_ROWS);
    let mut parts = map_ranges(&ranges, exec, map).into_iter();
    let first = parts.next()?;
    Some(parts.fold(first, &mut fold))
}
