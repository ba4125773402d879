//! Deterministic data-parallel helpers.
//!
//! Work is split into fixed-size chunks whose boundaries do not depend on the
//! number of worker threads, and partial results are combined in chunk order.

use rayon::prelude::*;

use crate::error::Result;

pub const CHUNK: usize = 1024;

/// `f(i, &items[i])` for every index, in index order. Returns the error of the
/// lowest failing index.
pub fn map_indexed<T, U, F>(items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> Result<U> + Sync,
{
    let chunks: Vec<Result<Vec<U>>> = items
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(ci, chunk)| {
            chunk
                .iter()
                .enumerate()
                .map(|(j, x)| f(ci * CHUNK + j, x))
                .collect::<Result<Vec<U>>>()
        })
        .collect();
    let mut out = Vec::with_capacity(items.len());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Sum of chunk-wise partial sums, each accumulated left to right.
pub fn ordered_sum(values: &[f64]) -> f64 {
    values.chunks(CHUNK).map(|c| c.iter().sum::<f64>()).sum()
}
