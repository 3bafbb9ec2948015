//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper here maps each index to an output slot, so results are
//! bit-identical whether the `parallel` feature is enabled or not, and
//! independent of the rayon thread count. Reductions that feed numerical
//! results go through fixed-size chunks summed in index order for the same
//! reason.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk size for deterministic reductions over ensembles.
pub(crate) const REDUCE_CHUNK: usize = 1024;

#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Sequential twin of [`map_indexed`], kept callable from benches so the
/// parallel and sequential code paths can be timed side by side.
pub fn seq_map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
