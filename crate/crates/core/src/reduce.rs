//! Order-fixed parallel reductions, so reruns are bitwise reproducible.

use rayon::prelude::*;

const CHUNK: usize = 4096;

/// Sum of a parallel iterator in the sequential item order.
pub(crate) fn ordered_sum<I: ParallelIterator<Item = f64>>(it: I) -> f64 {
    it.collect::<Vec<f64>>().iter().sum()
}

/// `Σ a_i b_i` over fixed-size chunks combined in order.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}
